"""Stability analyses: Routh-Hurwitz tables, root loci, zero scans, sweeps.

All operations are pure; grid sweeps are embarrassingly parallel and always
assemble their results in grid order regardless of execution order.

Linear force-loop stability work (zero scans, loci over the force gain,
force-parameter maps) runs on the measurement-idealized composition by
default: the velocity filter at the default bandwidth only adds stability
to the force loop, and the gain-driven degradation under study lives in the
idealized loop.  Pass ``ideal_velocity=False`` to analyze the filtered one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .loop_builder import (
    Environment,
    PositionGains,
    compose_force_loop,
    position_char_poly_composed,
    position_char_poly_ideal,
)
from .observer_model import ObserverConfig, PlantParams
from .poly_tf import DegenerateInputError, Polynomial, TransferFunction, poly_roots, tf_eval

#: Relative tolerance under which a root is classified as sitting on the axis.
MARGINAL_REL_TOL = 1e-9


def classify_root(root: complex) -> str:
    """'stable', 'marginal' or 'unstable' with the relative axis tolerance."""
    if abs(root.real) <= MARGINAL_REL_TOL * abs(root):
        return "marginal"
    return "stable" if root.real < 0 else "unstable"


# ---------------------------------------------------------------------------
# Routh-Hurwitz
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RouthReport:
    stable: bool
    rhp_count: int
    array: tuple[tuple[float, ...], ...]
    degenerate: bool


def _build_routh_table(first: list[float], second: list[float], eps_sign: float):
    """Complete a Routh table from its first two rows.

    Zero pivots (nonzero row) are replaced by eps_sign * 1e-9 * max|row|;
    full zero rows by the derivative of the auxiliary polynomial of the row
    above.  Returns (rows, degenerate_flag).
    """
    width = len(first)
    rows = [list(first), list(second)]
    n = len(first) + len(second) - 1  # degree
    degenerate = False
    table_scale = max(max(abs(x) for x in first), max(abs(x) for x in second), 1e-300)

    for i in range(2, n + 1):
        prev = rows[i - 1]
        prev2 = rows[i - 2]
        zero_tol = 1e-12 * table_scale
        if all(abs(x) <= zero_tol for x in prev):
            # Zero row: differentiate the auxiliary polynomial built from the
            # row above (coefficients of s^(n-i+2), s^(n-i), ...).
            degenerate = True
            order = n - (i - 2)
            new = []
            for j, c in enumerate(prev2):
                power = order - 2 * j
                new.append(power * c if power > 0 else 0.0)
            prev = new
            rows[i - 1] = prev
        pivot = prev[0]
        if abs(pivot) <= zero_tol:
            degenerate = True
            row_scale = max(abs(x) for x in prev)
            pivot = eps_sign * 1e-9 * (row_scale if row_scale > 0 else table_scale)
            prev = [pivot] + prev[1:]
            rows[i - 1] = prev
        row = []
        for j in range(width):
            up2 = prev2[j + 1] if j + 1 < width else 0.0
            up1 = prev[j + 1] if j + 1 < width else 0.0
            row.append((pivot * up2 - prev2[0] * up1) / pivot)
        rows.append(row)
        table_scale = max(table_scale, max(abs(x) for x in row))
    return rows, degenerate


def _sign_changes(col: Sequence[float]) -> int:
    changes = 0
    prev = None
    for x in col:
        s = math.copysign(1.0, x) if x != 0 else 0.0
        if s == 0.0:
            continue
        if prev is not None and s != prev:
            changes += 1
        prev = s
    return changes


def routh_hurwitz(p: Polynomial) -> RouthReport:
    """Routh-Hurwitz verdict on a real polynomial (ascending coefficients).

    Non-degenerate tables predict exactly rhp_count open-right-half-plane
    roots via first-column sign changes.  Degenerate tables (zero pivot or
    zero row) are completed with the epsilon-limit / auxiliary-polynomial
    methods, flagged, and never reported as strictly stable.
    """
    if p.degree is None or p.degree == 0:
        raise DegenerateInputError("Routh-Hurwitz needs degree >= 1")
    desc = list(p.coeffs[::-1])
    if desc[0] < 0:
        desc = [-c for c in desc]
    n = len(desc) - 1
    width = n // 2 + 1
    first = desc[0::2] + [0.0] * (width - len(desc[0::2]))
    second = desc[1::2] + [0.0] * (width - len(desc[1::2]))

    rows_pos, degen = _build_routh_table(first, second, +1.0)
    count_pos = _sign_changes([r[0] for r in rows_pos])
    if degen:
        rows_neg, _ = _build_routh_table(first, second, -1.0)
        count_neg = _sign_changes([r[0] for r in rows_neg])
        rhp = count_pos if count_pos == count_neg else count_pos
        stable = False
    else:
        rhp = count_pos
        stable = rhp == 0
    return RouthReport(
        stable=stable,
        rhp_count=rhp,
        array=tuple(tuple(r) for r in rows_pos),
        degenerate=degen,
    )


def third_order_alpha_condition(g_dob: float, gains: PositionGains) -> float:
    """Critical mismatch ratio below which the ideal position loop is unstable.

    With every coefficient positive, the single third-order Routh cross
    product governs, giving
    alpha* = g_dob*K_p / ((g_dob+K_D)(K_p+g_dob*K_D)).
    """
    if g_dob <= 0:
        raise ValueError("g_dob must be strictly positive")
    return (g_dob * gains.K_p) / ((g_dob + gains.K_D) * (gains.K_p + g_dob * gains.K_D))


# ---------------------------------------------------------------------------
# Root locus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RootLocusBranch:
    gains: tuple[float, ...]
    points: tuple[complex, ...]


@dataclass(frozen=True)
class RootLocusResult:
    branches: tuple[RootLocusBranch, ...]
    critical_gain: float | None  # smallest gain crossing Re=0, None if absent


def _char_roots(loop_den: Polynomial, loop_num: Polynomial, k: float, expected_deg: int):
    char = loop_den + loop_num.scale(k)
    if char.degree != expected_deg:
        raise DegenerateInputError(
            f"characteristic degree changed at gain {k!r} (leading cancellation)"
        )
    try:
        return poly_roots(char)
    except Exception as exc:  # pragma: no cover - defensive
        raise type(exc)(f"root finding failed at gain {k!r}: {exc}") from exc


def root_locus(
    loop_num: Polynomial,
    loop_den: Polynomial,
    gain_grid: Sequence[float],
) -> RootLocusResult:
    """Track closed-loop pole trajectories of den + K*num over the gain grid.

    Branches are continuation-matched between consecutive gains with an
    optimal nearest-neighbor assignment so each branch is a continuous
    trajectory.  The smallest gain at which any branch reaches Re >= 0 is
    located by bisection between the bracketing grid gains; if the first
    grid point is already non-Hurwitz that gain is returned as the critical
    estimate, and None means no crossing inside the grid.
    """
    grid = [float(k) for k in gain_grid]
    if not grid or any(k <= 0 for k in grid) or any(
        b <= a for a, b in zip(grid, grid[1:])
    ):
        raise ValueError("gain grid must be ascending and strictly positive")
    if loop_den.degree is None or loop_num.degree is None:
        raise DegenerateInputError("loop numerator/denominator must be nonzero")
    if loop_den.degree < loop_num.degree:
        raise ValueError("loop must be proper (den degree >= num degree)")

    deg = loop_den.degree
    trails: list[list[complex]] = [[] for _ in range(deg)]
    max_re: list[float] = []
    prev: list[complex] | None = None
    for k in grid:
        roots = _char_roots(loop_den, loop_num, k, deg)
        if prev is not None:
            cost = np.array(
                [[abs(r - q) for r in roots] for q in prev], dtype=float
            )
            _, cols = linear_sum_assignment(cost)
            roots = [roots[c] for c in cols]
        for t, r in zip(trails, roots):
            t.append(r)
        max_re.append(max(r.real for r in roots))
        prev = roots

    critical: float | None = None
    if max_re[0] >= 0.0:
        critical = grid[0]
    else:
        for i in range(1, len(grid)):
            if max_re[i - 1] < 0.0 <= max_re[i]:
                lo, hi = grid[i - 1], grid[i]
                for _ in range(200):
                    mid = math.sqrt(lo * hi)
                    if mid <= lo or mid >= hi:
                        break
                    if max(r.real for r in _char_roots(loop_den, loop_num, mid, deg)) >= 0:
                        hi = mid
                    else:
                        lo = mid
                critical = 0.5 * (lo + hi)
                break

    gains_t = tuple(grid)
    branches = tuple(RootLocusBranch(gains=gains_t, points=tuple(t)) for t in trails)
    return RootLocusResult(branches=branches, critical_gain=critical)


def force_loop_critical_gain(
    plant: PlantParams,
    obs: ObserverConfig,
    env: Environment,
    gain_grid: Sequence[float],
    ideal_velocity: bool = True,
) -> RootLocusResult:
    """Root locus of the force loop over the force gain; see module docstring
    for the ideal-velocity default."""
    model = compose_force_loop(plant, obs, env, c_f=1.0, ideal_velocity=ideal_velocity)
    return root_locus(model.open_loop.num, model.open_loop.den, gain_grid)


# ---------------------------------------------------------------------------
# Zero scan / sensitivity peak
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RhpZeroReport:
    ratio: float
    j_hat: float
    max_zero_real_part: float
    rhp_zero_count: int
    zeros: tuple[complex, ...]


def rhp_zero_scan(
    plant: PlantParams,
    obs_base: ObserverConfig,
    env: Environment,
    j_hat_ratios: Sequence[float],
    ideal_velocity: bool = True,
) -> list[RhpZeroReport]:
    """Loop-gain zero report per identified-inertia ratio J_hat = r*J_m."""
    if any(r <= 0 for r in j_hat_ratios):
        raise ValueError("j_hat_ratios must be strictly positive")
    out = []
    for r in j_hat_ratios:
        obs = ObserverConfig(
            g_dob=obs_base.g_dob, g_rfob=obs_base.g_rfob, g_v=obs_base.g_v,
            J_hat=r * plant.J_m, K_tau_hat=obs_base.K_tau_hat,
        )
        model = compose_force_loop(plant, obs, env, c_f=1.0, ideal_velocity=ideal_velocity)
        rhp = sum(1 for z in model.zeros if classify_root(z) == "unstable")
        out.append(RhpZeroReport(
            ratio=float(r),
            j_hat=obs.J_hat,
            max_zero_real_part=max(z.real for z in model.zeros),
            rhp_zero_count=rhp,
            zeros=model.zeros,
        ))
    return out


@dataclass(frozen=True)
class PeakResult:
    peak: float
    omega: float


def sensitivity_peak(
    tf: TransferFunction,
    omega_range: tuple[float, float],
    points_per_decade: int = 64,
) -> PeakResult:
    """Maximum of |tf(j w)| over a log grid, refined by golden-section search.

    Deterministic: fixed grid density and a fixed iteration budget around the
    grid argmax.
    """
    lo, hi = omega_range
    if not (0 < lo < hi):
        raise ValueError("need 0 < omega_min < omega_max")
    decades = math.log10(hi / lo)
    n = max(128, int(round(decades * points_per_decade)) + 1)
    omegas = np.logspace(math.log10(lo), math.log10(hi), n)
    mags = np.array([abs(tf_eval(tf, float(w))) for w in omegas])
    i = int(np.argmax(mags))
    a = math.log10(omegas[max(i - 1, 0)])
    b = math.log10(omegas[min(i + 1, n - 1)])

    def f(x: float) -> float:
        return abs(tf_eval(tf, 10.0 ** x))

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(120):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
    xm = 0.5 * (a + b)
    fm = f(xm)
    if fm < mags[i]:
        xm, fm = math.log10(omegas[i]), float(mags[i])
    return PeakResult(peak=fm, omega=10.0 ** xm)


# ---------------------------------------------------------------------------
# Parameter sweeps
# ---------------------------------------------------------------------------

SWEEP_PARAMETERS = ("alpha", "g_dob", "g_v", "C_f", "j_hat_ratio", "k_tau_hat_ratio")


@dataclass(frozen=True)
class StabilityMap:
    parameter: str
    values: tuple[float, ...]
    stable: tuple[bool, ...]
    boundaries: tuple[float, ...]  # refined crossing estimates


def _char_poly_builder(parameter: str, fixed: Mapping[str, float],
                       ideal_velocity: bool) -> Callable[[float], Polynomial]:
    f = dict(fixed)
    gains = PositionGains(K_p=f["K_p"], K_D=f["K_D"])

    def plant_with(j_mn=None):
        return PlantParams(
            J_m=f["J_m"], K_tau=f["K_tau"],
            J_mn=f["J_mn"] if j_mn is None else j_mn, K_tau_n=f["K_tau_n"],
        )

    def obs_with(j_hat=None, k_tau_hat=None):
        return ObserverConfig(
            g_dob=f["g_dob"], g_rfob=f["g_rfob"], g_v=f["g_v"],
            J_hat=f["J_hat"] if j_hat is None else j_hat,
            K_tau_hat=f["K_tau_hat"] if k_tau_hat is None else k_tau_hat,
        )

    env = Environment(D_env=f["D_env"], K_env=f["K_env"], q_e=f["q_e"])

    if parameter == "alpha":
        return lambda v: position_char_poly_ideal(v, f["g_dob"], gains)
    if parameter == "g_dob":
        return lambda v: position_char_poly_ideal(
            (f["J_mn"] * f["K_tau"]) / (f["J_m"] * f["K_tau_n"]), v, gains)
    if parameter == "g_v":
        alpha = (f["J_mn"] * f["K_tau"]) / (f["J_m"] * f["K_tau_n"])
        return lambda v: position_char_poly_composed(alpha, f["g_dob"], v, gains)

    def force_char(obs, c_f):
        m = compose_force_loop(plant_with(), obs, env, c_f=1.0,
                               ideal_velocity=ideal_velocity)
        return m.open_loop.den + m.open_loop.num.scale(c_f)

    if parameter == "C_f":
        return lambda v: force_char(obs_with(), v)
    if parameter == "j_hat_ratio":
        return lambda v: force_char(obs_with(j_hat=v * f["J_m"]), f["C_f"])
    if parameter == "k_tau_hat_ratio":
        return lambda v: force_char(obs_with(k_tau_hat=v * f["K_tau"]), f["C_f"])
    raise ValueError(
        f"unknown sweep parameter {parameter!r}; expected one of {SWEEP_PARAMETERS}"
    )


def stability_map(
    parameter: str,
    grid: Sequence[float],
    fixed: Mapping[str, float],
    ideal_velocity: bool = True,
    threads: int = 1,
) -> StabilityMap:
    """Routh verdict over a one-parameter grid, with refined flip locations.

    Points are independent; with threads > 1 they are evaluated in a thread
    pool, and results are always assembled in grid order.  Degenerate Routh
    tables count as not-proven-stable.
    """
    values = [float(v) for v in grid]
    if not values or any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("grid must be ascending and nonempty")
    build = _char_poly_builder(parameter, fixed, ideal_velocity)

    def verdict(v: float) -> bool:
        return routh_hurwitz(build(v)).stable

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            stable = list(pool.map(verdict, values))
    else:
        stable = [verdict(v) for v in values]

    boundaries = []
    for i in range(1, len(values)):
        if stable[i - 1] != stable[i]:
            lo, hi = values[i - 1], values[i]
            lo_stable = stable[i - 1]
            for _ in range(48):
                mid = 0.5 * (lo + hi)
                if verdict(mid) == lo_stable:
                    lo = mid
                else:
                    hi = mid
            boundaries.append(0.5 * (lo + hi))
    return StabilityMap(
        parameter=parameter,
        values=tuple(values),
        stable=tuple(stable),
        boundaries=tuple(boundaries),
    )
