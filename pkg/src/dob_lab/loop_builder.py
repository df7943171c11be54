"""Construction of every loop transfer function in the toolkit.

Each loop exists in two independent forms: the printed closed-form ratio
(``position_loop_ideal``, ``position_loop_finite_gv``, ``sensitivity_tf``)
and a block-diagram composition built from plant/observer/controller
primitives (``compose_position_loop``, ``compose_force_loop``).  The two
routes are kept separate so they can cross-validate each other; the toolkit
never silently substitutes one for the other.

Force-loop signal conventions (Laplace domain, friction zero, environment
coordinates shifted so q_e = qdot_e = 0):

    J_m s^2 q = K_tau I_m - F_l,   F_l = (D_env s + K_env) q
    v_meas    = [g_v/(s+g_v)] s q          (filter omitted when ideal)
    DOB:  F_dis_hat = [g_dob/(s+g_dob)] (K_tau_n I_m - J_mn s v_meas)
          I_cmp = F_dis_hat / K_tau_n
    RFOB: F_l_hat = [g_rfob/(s+g_rfob)] (K_tau_hat I_m - J_hat s v_meas)
    Controller: qdd_des = C_f (F_l_ref - F_l_hat),  I_des = (J_mn/K_tau_n) qdd_des
    I_m = I_des + I_cmp

The position outer loop is qdd_des = qdd_ref + K_D(qd_ref - v_fb) +
K_p(q_ref - q), with v_fb the filtered velocity in the finite-bandwidth
variant and s*q in the ideal one.
"""

from __future__ import annotations

from dataclasses import dataclass

from .observer_model import ObserverConfig, PlantParams, alpha as plant_alpha
from .poly_tf import (
    ONE,
    S,
    Polynomial,
    TransferFunction,
    poly_roots,
    tf_feedback,
)


class NoContactError(ValueError):
    """Raised when a contact analysis is requested with a degenerate environment."""


@dataclass(frozen=True)
class PositionGains:
    """Proportional/derivative gains of the acceleration-based outer loop."""

    K_p: float
    K_D: float

    def __post_init__(self):
        if not (self.K_p > 0 and self.K_D > 0):
            raise ValueError("K_p and K_D must be strictly positive")

    @classmethod
    def from_mapping(cls, m) -> "PositionGains":
        return cls(K_p=m["K_p"], K_D=m["K_D"])


@dataclass(frozen=True)
class Environment:
    """Lumped spring-damper contact model at surface position q_e."""

    D_env: float
    K_env: float
    q_e: float = 0.0
    qdot_e: float = 0.0

    def __post_init__(self):
        if self.D_env < 0 or self.K_env < 0:
            raise ValueError("D_env and K_env must be nonnegative")

    @classmethod
    def from_mapping(cls, m) -> "Environment":
        return cls(D_env=m["D_env"], K_env=m["K_env"], q_e=m["q_e"])


@dataclass(frozen=True)
class ForceLoopModel:
    """Composed force loop: loop gain (C_f factored out), closed loop, true force map."""

    open_loop: TransferFunction
    closed_loop: TransferFunction
    true_force_tf: TransferFunction
    zeros: tuple[complex, ...]
    poles: tuple[complex, ...]


# ---------------------------------------------------------------------------
# Inner loop
# ---------------------------------------------------------------------------

def dob_open_loop(
    alpha: float, g_dob: float, g_v: float, ideal_velocity: bool = False
) -> TransferFunction:
    """Loop gain of the disturbance-rejection inner loop.

    Ideal velocity measurement gives alpha*g_dob/s; a finite measurement
    bandwidth gives alpha*g_v*g_dob/(s(s+g_v)).
    """
    if ideal_velocity:
        return TransferFunction((alpha * g_dob,), (0.0, 1.0))
    return TransferFunction((alpha * g_v * g_dob,), (0.0, g_v, 1.0))


def sensitivity_tf(alpha: float, g_dob: float, g_v: float) -> TransferFunction:
    """Inner-loop sensitivity s(s+g_v) / (s^2 + g_v s + alpha*g_v*g_dob).

    Equals 1/(1 + dob_open_loop(finite)); the numerator root at the origin
    gives zero DC sensitivity.
    """
    return TransferFunction((0.0, g_v, 1.0), (alpha * g_v * g_dob, g_v, 1.0))


# ---------------------------------------------------------------------------
# Position loop, printed closed forms
# ---------------------------------------------------------------------------

def _pd_factor(gains: PositionGains) -> Polynomial:
    return Polynomial((gains.K_p, gains.K_D, 1.0))


def position_char_poly_ideal(alpha: float, g_dob: float, gains: PositionGains) -> Polynomial:
    """Printed third-order characteristic polynomial, unnormalized:

    alpha^-1 s^3 + (g_dob+K_D) s^2 + (K_p + g_dob*K_D) s + g_dob*K_p
    """
    return Polynomial((
        g_dob * gains.K_p,
        gains.K_p + g_dob * gains.K_D,
        g_dob + gains.K_D,
        1.0 / alpha,
    ))


def position_loop_ideal(alpha: float, g_dob: float, gains: PositionGains) -> TransferFunction:
    """Printed closed-loop ratio for ideal velocity measurement.

    The numerator is the printed s(s+g_dob)(s^2+K_D s+K_p); as an
    acceleration-to-acceleration map this ratio is improper, so the
    denominator is what stability work should consume (see
    position_char_poly_ideal); block-derived compositions are authoritative
    for responses.
    """
    num = S * Polynomial((g_dob, 1.0)) * _pd_factor(gains)
    return TransferFunction(num, position_char_poly_ideal(alpha, g_dob, gains))


def position_char_poly_finite_gv(
    alpha: float, g_dob: float, g_v: float, gains: PositionGains
) -> Polynomial:
    """Printed fourth-order characteristic polynomial for finite g_v:

    s^4 + g_v s^3 + alpha*g_v*g_dob s^2 + alpha(s+g_v)(s+g_dob)(s^2+K_D s+K_p)
    """
    base = Polynomial((0.0, 0.0, alpha * g_v * g_dob, g_v, 1.0))
    prod = Polynomial((g_v, 1.0)) * Polynomial((g_dob, 1.0)) * _pd_factor(gains)
    return base + prod.scale(alpha)


def position_loop_finite_gv(
    alpha: float, g_dob: float, g_v: float, gains: PositionGains
) -> TransferFunction:
    """Printed closed-loop ratio for finite velocity-measurement bandwidth."""
    num = (Polynomial((g_v, 1.0)) * Polynomial((g_dob, 1.0)) * _pd_factor(gains)).scale(alpha)
    return TransferFunction(num, position_char_poly_finite_gv(alpha, g_dob, g_v, gains))


# ---------------------------------------------------------------------------
# Position loop, block-diagram composition
# ---------------------------------------------------------------------------

def _inner_acceleration_tf(alpha: float, g_dob: float, g_v: float, ideal_velocity: bool) -> TransferFunction:
    """Map from desired to actual acceleration through plant + DOB.

    Closing the compensation-current loop gives alpha*(s+g_dob)/(s+alpha*g_dob)
    in the ideal case and alpha(s+g_dob)(s+g_v)/(s^2+g_v s+alpha*g_dob*g_v)
    with the velocity filter; the loop is reduced with tf_feedback rather than
    transcribed.
    """
    q_dob = TransferFunction((g_dob,), (g_dob, 1.0))
    if ideal_velocity:
        alpha_gv_minus_one = TransferFunction((alpha - 1.0,), (1.0,))
    else:
        alpha_gv_minus_one = TransferFunction((alpha * g_v - g_v, -1.0), (g_v, 1.0))
    one_tf = TransferFunction(ONE, ONE)
    inner = tf_feedback(one_tf, q_dob * alpha_gv_minus_one)
    return alpha * inner


def compose_position_loop(
    plant: PlantParams,
    obs: ObserverConfig,
    gains: PositionGains,
    ideal_velocity: bool = False,
) -> TransferFunction:
    """Close the full position loop from primitives and return qdd/qdd_ref.

    For the ideal-velocity case the resulting characteristic polynomial is a
    positive multiple of position_char_poly_ideal; the finite case is compared
    against the printed fourth-order form by finite_gv_comparison (the two do
    not agree, which is reported rather than asserted).
    """
    a = plant_alpha(plant)
    h = _inner_acceleration_tf(a, obs.g_dob, obs.g_v, ideal_velocity)
    plant_dbl_int = TransferFunction(ONE, S * S)
    forward = h * plant_dbl_int
    if ideal_velocity:
        fb = TransferFunction(Polynomial((gains.K_p, gains.K_D)), ONE)
    else:
        fb = TransferFunction(
            Polynomial((gains.K_p * obs.g_v, gains.K_p + gains.K_D * obs.g_v)),
            Polynomial((obs.g_v, 1.0)),
        )
    closed = tf_feedback(forward, fb)
    feedforward = TransferFunction(_pd_factor(gains), ONE)
    return feedforward * closed


def position_char_poly_composed(
    alpha: float, g_dob: float, g_v: float, gains: PositionGains, ideal_velocity: bool = False
) -> Polynomial:
    """Characteristic polynomial of the block-derived position loop, reduced.

    The common (s+g_v) factor that the finite-g_v reduction carries through
    numerator and denominator is assembled out analytically, leaving degree 4
    (degree 3 when ideal).
    """
    if ideal_velocity:
        inner_den = Polynomial((alpha * g_dob, 1.0))
        fb = Polynomial((gains.K_p, gains.K_D))
    else:
        inner_den = Polynomial((alpha * g_dob * g_v, g_v, 1.0))
        fb = Polynomial((gains.K_p * g_v, gains.K_p + gains.K_D * g_v))
    lead_zero = Polynomial((g_dob, 1.0)).scale(alpha)
    return S * S * inner_den + lead_zero * fb


@dataclass(frozen=True)
class FiniteGvComparison:
    """Discrepancy report between the printed and block-derived finite-g_v loops."""

    formula_coeffs: tuple[float, ...]
    composed_coeffs: tuple[float, ...]
    max_rel_coeff_diff: float
    formula_roots: tuple[complex, ...]
    composed_roots: tuple[complex, ...]

    def summary(self) -> str:
        lines = [
            "finite-bandwidth position loop: printed formula vs block composition",
            f"  monic formula coeffs : {self.formula_coeffs}",
            f"  monic composed coeffs: {self.composed_coeffs}",
            f"  max relative coefficient difference: {self.max_rel_coeff_diff:.6g}",
        ]
        return "\n".join(lines)


def finite_gv_comparison(
    alpha: float, g_dob: float, g_v: float, gains: PositionGains
) -> FiniteGvComparison:
    """Compute both finite-g_v characteristic polynomials and report the gap.

    No agreement is asserted: the printed fourth-order form does not reduce to
    the ideal third-order form in the g_v -> infinity limit, so the mismatch
    is documented output, not a test failure.
    """
    formula = position_char_poly_finite_gv(alpha, g_dob, g_v, gains).monic()
    composed = position_char_poly_composed(alpha, g_dob, g_v, gains).monic()
    n = max(len(formula.coeffs), len(composed.coeffs))
    fc = formula.coeffs + (0.0,) * (n - len(formula.coeffs))
    cc = composed.coeffs + (0.0,) * (n - len(composed.coeffs))
    scale = max(max(abs(c) for c in fc), max(abs(c) for c in cc))
    diff = max(abs(f - c) for f, c in zip(fc, cc)) / scale
    return FiniteGvComparison(
        formula_coeffs=fc,
        composed_coeffs=cc,
        max_rel_coeff_diff=diff,
        formula_roots=tuple(poly_roots(formula)),
        composed_roots=tuple(poly_roots(composed)),
    )


# ---------------------------------------------------------------------------
# Force loop
# ---------------------------------------------------------------------------

def rfob_estimator_tf(obs: ObserverConfig) -> tuple[TransferFunction, TransferFunction]:
    """Partial maps of the load-force estimator.

    Returns (from I_m, from measured velocity) such that
    F_l_hat = K_tau_hat*g_rfob/(s+g_rfob) * I_m - J_hat*g_rfob*s/(s+g_rfob) * v_meas.
    The DC gain from a constant current with zero velocity is K_tau_hat.
    """
    d = Polynomial((obs.g_rfob, 1.0))
    from_current = TransferFunction((obs.K_tau_hat * obs.g_rfob,), d)
    from_velocity = TransferFunction((0.0, -obs.J_hat * obs.g_rfob), d)
    return from_current, from_velocity


def compose_force_loop(
    plant: PlantParams,
    obs: ObserverConfig,
    env: Environment,
    c_f: float,
    ideal_velocity: bool = False,
) -> ForceLoopModel:
    """Compose the force loop with permanent contact and friction zero.

    The loop gain per unit C_f (estimated force per unit desired
    acceleration) is assembled from the signal equations in the module
    docstring with shared-denominator factors removed analytically, never by
    numeric cancellation:

        open_loop = (J_mn/K_tau_n) * g_rfob (s+g_dob) A / ((s+g_rfob) C)
        A = K_tau_hat (s+g_v) D_p - J_hat K_tau g_v s^2
        C = s (s+g_v) D_p + alpha g_dob g_v J_m s^2
        D_p = J_m s^2 + D_env s + K_env

    (with (s+g_v) and the g_v factors replaced by 1 in the ideal-velocity
    variant).  Zeros/poles reported are those of the loop gain.
    """
    if env.D_env == 0 and env.K_env == 0:
        raise NoContactError("contact analysis needs D_env or K_env nonzero")
    a = plant_alpha(plant)
    d_p = Polynomial((env.K_env, env.D_env, plant.J_m))
    if ideal_velocity:
        d_v, n_v = ONE, 1.0
    else:
        d_v, n_v = Polynomial((obs.g_v, 1.0)), obs.g_v
    d_dob = Polynomial((obs.g_dob, 1.0))
    d_rfob = Polynomial((obs.g_rfob, 1.0))
    s2 = S * S

    a_poly = (d_v * d_p).scale(obs.K_tau_hat) - s2.scale(obs.J_hat * plant.K_tau * n_v)
    c_poly = S * d_v * d_p + s2.scale(a * obs.g_dob * n_v * plant.J_m)

    gain = plant.J_mn / plant.K_tau_n
    open_loop = TransferFunction((d_dob * a_poly).scale(gain * obs.g_rfob), d_rfob * c_poly)

    closed_loop = tf_feedback(c_f * open_loop, TransferFunction(ONE, ONE))

    env_poly = Polynomial((env.K_env, env.D_env))
    true_num = (env_poly * d_dob * d_v * d_rfob).scale(c_f * gain * plant.K_tau)
    true_den = d_rfob * c_poly + (d_dob * a_poly).scale(c_f * gain * obs.g_rfob)
    true_force_tf = TransferFunction(true_num, true_den)

    return ForceLoopModel(
        open_loop=open_loop,
        closed_loop=closed_loop,
        true_force_tf=true_force_tf,
        zeros=tuple(poly_roots(open_loop.num)),
        poles=tuple(poly_roots(open_loop.den)),
    )
