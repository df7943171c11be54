"""Real-coefficient polynomial and rational transfer-function algebra in s.

Everything downstream (loop construction, stability analysis, frequency
sweeps) is built on the two value types here.  Coefficients are stored in
ascending powers of s, i.e. ``coeffs[k]`` multiplies ``s**k``; that single
canonical layout is also used for serialization ("2,3,1" means s^2+3s+2).

All types are immutable after construction and all operations are pure
functions, so they can be evaluated concurrently without locking.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class DegenerateInputError(ValueError):
    """Raised when an operation needs degree >= 1 but got a constant or zero."""


class AlgebraicDegeneracyError(ValueError):
    """Raised when a loop reduction produces an identically zero denominator."""


class PoleEvaluationError(ValueError):
    """Raised when a transfer function is evaluated exactly on one of its poles."""


@dataclass(frozen=True)
class Polynomial:
    """Polynomial in s with real coefficients, ascending powers.

    Trailing zero coefficients above the true degree are stripped on
    construction, so the leading coefficient is nonzero for any nonzero
    polynomial.  The zero polynomial is represented as ``(0.0,)`` and has
    degree ``None`` (never -1 arithmetic).
    """

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Iterable[float]):
        c = [float(x) for x in coeffs]
        while len(c) > 1 and c[-1] == 0.0:
            c.pop()
        if not c:
            c = [0.0]
        object.__setattr__(self, "coeffs", tuple(c))

    @property
    def degree(self) -> int | None:
        if self.is_zero:
            return None
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs == (0.0,)

    @classmethod
    def from_roots(cls, roots: Sequence[complex], leading: float = 1.0) -> "Polynomial":
        """Expand prod(s - r) * leading; imaginary residue of conjugate pairs is dropped."""
        c = np.array([1.0 + 0.0j])
        for r in roots:
            c = np.convolve(c, np.array([-r, 1.0 + 0.0j]))
        return cls((c.real * leading).tolist())

    @classmethod
    def from_string(cls, text: str) -> "Polynomial":
        """Parse the serialized comma-separated ascending-coefficient form."""
        parts = [p.strip() for p in text.split(",")]
        if not parts or any(p == "" for p in parts):
            raise ValueError(f"malformed polynomial string: {text!r}")
        return cls(float(p) for p in parts)

    def to_string(self) -> str:
        return ",".join(repr(c) for c in self.coeffs)

    def __call__(self, s: complex) -> complex:
        # Horner evaluation, highest power first.
        acc = 0.0 + 0.0j
        for c in reversed(self.coeffs):
            acc = acc * s + c
        return acc

    def __add__(self, other: "Polynomial") -> "Polynomial":
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        return Polynomial(
            (a[i] if i < len(a) else 0.0) + (b[i] if i < len(b) else 0.0)
            for i in range(n)
        )

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __neg__(self) -> "Polynomial":
        return Polynomial(-c for c in self.coeffs)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return poly_mul(self, other)
        return self.scale(float(other))

    __rmul__ = __mul__

    def scale(self, k: float) -> "Polynomial":
        return Polynomial(k * c for c in self.coeffs)

    def deriv(self) -> "Polynomial":
        if len(self.coeffs) == 1:
            return Polynomial((0.0,))
        return Polynomial(k * c for k, c in enumerate(self.coeffs) if k > 0)

    def monic(self) -> "Polynomial":
        if self.is_zero:
            raise DegenerateInputError("cannot normalize the zero polynomial")
        lead = self.coeffs[-1]
        return Polynomial(c / lead for c in self.coeffs)


S = Polynomial((0.0, 1.0))
ONE = Polynomial((1.0,))


def poly_mul(a: Polynomial, b: Polynomial) -> Polynomial:
    """Product of two polynomials (coefficient convolution)."""
    if a.is_zero or b.is_zero:
        return Polynomial((0.0,))
    return Polynomial(np.convolve(a.coeffs, b.coeffs).tolist())


def poly_roots(p: Polynomial) -> list[complex]:
    """All complex roots of p, with multiplicity, sorted by (real, imag).

    Uses companion-matrix eigenvalues on coefficients pre-scaled by the
    largest magnitude coefficient, followed by a guarded Newton polish.
    The accuracy contract is the residual bound
    |p(r)| / (max|coeff| * max(1, |r|)**deg) <= 1e-8, not the algorithm.
    """
    deg = p.degree
    if deg is None or deg == 0:
        raise DegenerateInputError("root finding needs degree >= 1")
    scale = max(abs(c) for c in p.coeffs)
    c = np.asarray(p.coeffs, dtype=float) / scale
    if deg == 1:
        roots = [complex(-c[0] / c[1])]
    else:
        roots = [complex(r) for r in np.roots(c[::-1])]
    dp = p.deriv()
    polished = []
    for r in roots:
        for _ in range(2):
            pv = p(r)
            dv = dp(r)
            if dv == 0:
                break
            step = pv / dv
            if not (cmath.isfinite(step.real) and cmath.isfinite(step.imag)):
                break
            r2 = r - step
            if abs(p(r2)) <= abs(pv):
                r = r2
            else:
                break
        polished.append(r)
    polished.sort(key=lambda z: (z.real, z.imag))
    return polished


@dataclass(frozen=True)
class TransferFunction:
    """Ratio num/den of two polynomials in canonical monic-denominator form.

    The denominator leading coefficient is scaled to one on construction and
    the numerator is scaled to match, so equal rational functions built with
    different overall scalings compare coefficient-wise.  No pole-zero
    cancellation is ever performed implicitly.
    """

    num: Polynomial
    den: Polynomial

    def __init__(self, num: Polynomial | Iterable[float], den: Polynomial | Iterable[float]):
        if not isinstance(num, Polynomial):
            num = Polynomial(num)
        if not isinstance(den, Polynomial):
            den = Polynomial(den)
        if den.is_zero:
            raise AlgebraicDegeneracyError("transfer function denominator is zero")
        lead = den.coeffs[-1]
        object.__setattr__(self, "num", num.scale(1.0 / lead))
        object.__setattr__(self, "den", den.scale(1.0 / lead))

    def __mul__(self, other):
        if isinstance(other, TransferFunction):
            return TransferFunction(self.num * other.num, self.den * other.den)
        return TransferFunction(self.num.scale(float(other)), self.den)

    __rmul__ = __mul__

    def __add__(self, other: "TransferFunction") -> "TransferFunction":
        return TransferFunction(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    def poles(self) -> list[complex]:
        return poly_roots(self.den)

    def zeros(self) -> list[complex]:
        if self.num.degree in (None, 0):
            return []
        return poly_roots(self.num)

    def dc_gain(self) -> float:
        val = tf_eval(self, 0.0) if self.den.coeffs[0] != 0 else math.inf
        return val.real if isinstance(val, complex) else val


def tf_feedback(forward: TransferFunction, feedback: TransferFunction) -> TransferFunction:
    """Close a negative-feedback loop: forward / (1 + forward*feedback).

    The closed-loop denominator is forward.den*feedback.den +
    forward.num*feedback.num; no common factors are cancelled.
    """
    den = forward.den * feedback.den + forward.num * feedback.num
    if den.is_zero:
        raise AlgebraicDegeneracyError("closed-loop denominator is identically zero")
    return TransferFunction(forward.num * feedback.den, den)


def tf_eval(tf: TransferFunction, omega: float) -> complex:
    """Evaluate tf at s = j*omega via Horner in complex arithmetic."""
    s = 1j * omega
    dv = tf.den(s)
    if dv == 0:
        raise PoleEvaluationError(f"evaluation at a pole: omega={omega!r}")
    return tf.num(s) / dv


@dataclass(frozen=True)
class FrequencyPoint:
    omega: float
    magnitude_db: float
    phase_deg: float


def frequency_sweep(
    tf: TransferFunction,
    omega_min: float,
    omega_max: float,
    points_per_decade: int,
) -> list[FrequencyPoint]:
    """Log-spaced frequency response with continuously unwrapped phase.

    Deterministic for identical inputs.  If the grid lands exactly on an
    imaginary-axis pole the evaluation error propagates, naming the omega.
    """
    if not (0 < omega_min < omega_max):
        raise ValueError("need 0 < omega_min < omega_max")
    if points_per_decade < 1:
        raise ValueError("points_per_decade must be >= 1")
    decades = math.log10(omega_max / omega_min)
    n = max(2, int(round(decades * points_per_decade)) + 1)
    omegas = np.logspace(math.log10(omega_min), math.log10(omega_max), n)
    values = [tf_eval(tf, float(w)) for w in omegas]
    mags = np.abs(values)
    with np.errstate(divide="ignore"):
        mags_db = 20.0 * np.log10(mags)
    phases = np.degrees(np.unwrap(np.angle(values)))
    return [
        FrequencyPoint(float(w), float(m), float(p))
        for w, m, p in zip(omegas, mags_db, phases)
    ]
