"""Physical/design parameters of the observer-based motion control system.

Computes the inertia/torque mismatch ratio alpha, the equivalent
second-order design parameters (natural frequency and damping) of the
inner loop, and the bandwidth robustness constraint verdict
``alpha * g_dob <= g_v / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .kvconfig import ConfigError, parse_kv_text

#: The exact key set of a parameter config file, SI units throughout.
PARAM_KEYS = (
    "J_m", "K_tau", "J_mn", "K_tau_n", "J_hat", "K_tau_hat",
    "g_dob", "g_rfob", "g_v", "K_p", "K_D", "C_f", "D_env", "K_env", "q_e",
)

#: Desk-scale configuration defaults used by demos, figure bundles and tests.
#: These are toolkit configuration values, not measured ground truth.
DEFAULTS: dict[str, float] = {
    "J_m": 0.004,      # kg m^2
    "K_tau": 0.4,      # N m / A
    "J_mn": 0.004,
    "K_tau_n": 0.4,
    "J_hat": 0.004,
    "K_tau_hat": 0.4,
    "g_dob": 300.0,    # rad/s
    "g_rfob": 300.0,
    "g_v": 1000.0,
    "K_p": 400.0,      # 1/s^2
    "K_D": 40.0,       # 1/s
    "C_f": 50.0,       # (m/s^2)/N
    "D_env": 2.0,      # N s/m
    "K_env": 3000.0,   # N/m
    "q_e": 0.01,       # m
}


def default_params() -> dict[str, float]:
    return dict(DEFAULTS)


def _require_positive(violations: list[str], name: str, value: float) -> None:
    if not (value > 0):
        violations.append(f"{name} must be strictly positive, got {value!r}")


@dataclass(frozen=True)
class PlantParams:
    """True and nominal inertia / torque coefficient of the motor."""

    J_m: float
    K_tau: float
    J_mn: float
    K_tau_n: float

    def __post_init__(self):
        bad: list[str] = []
        for name in ("J_m", "K_tau", "J_mn", "K_tau_n"):
            _require_positive(bad, name, getattr(self, name))
        if bad:
            raise ValueError("; ".join(bad))

    @classmethod
    def from_mapping(cls, m) -> "PlantParams":
        return cls(J_m=m["J_m"], K_tau=m["K_tau"], J_mn=m["J_mn"], K_tau_n=m["K_tau_n"])


@dataclass(frozen=True)
class ObserverConfig:
    """Filter cutoffs and identified parameters of the DOB/RFOB pair."""

    g_dob: float
    g_rfob: float
    g_v: float
    J_hat: float
    K_tau_hat: float

    def __post_init__(self):
        bad: list[str] = []
        for name in ("g_dob", "g_rfob", "g_v", "J_hat", "K_tau_hat"):
            _require_positive(bad, name, getattr(self, name))
        if bad:
            raise ValueError("; ".join(bad))

    @classmethod
    def from_mapping(cls, m) -> "ObserverConfig":
        return cls(
            g_dob=m["g_dob"], g_rfob=m["g_rfob"], g_v=m["g_v"],
            J_hat=m["J_hat"], K_tau_hat=m["K_tau_hat"],
        )


@dataclass(frozen=True)
class DesignVerdict:
    """Outcome of the bandwidth robustness check.

    ``satisfied`` is equivalent to ``constraint_lhs <= constraint_rhs`` and to
    ``xi >= 1/sqrt(2)``; margin is rhs - lhs in rad/s.
    """

    alpha: float
    kappa: float
    w_n: float
    xi: float
    constraint_lhs: float
    constraint_rhs: float
    satisfied: bool
    margin: float


def alpha(p: PlantParams) -> float:
    """Mismatch ratio J_mn*K_tau / (J_m*K_tau_n); > 1 means lead behavior."""
    return (p.J_mn * p.K_tau) / (p.J_m * p.K_tau_n)


def second_order_params(alpha: float, kappa: float, g_dob: float) -> tuple[float, float]:
    """Natural frequency and damping of the inner loop's characteristic pair.

    w_n = sqrt(alpha*kappa) * g_dob and xi = 0.5*sqrt(kappa/alpha); these are
    exactly the constant and linear coefficients (w_n^2, 2*xi*w_n) of the
    inner-loop denominator s^2 + g_v s + alpha*g_v*g_dob.
    """
    if alpha <= 0 or kappa <= 0 or g_dob <= 0:
        raise ValueError("alpha, kappa and g_dob must be strictly positive")
    w_n = math.sqrt(alpha * kappa) * g_dob
    xi = 0.5 * math.sqrt(kappa / alpha)
    return w_n, xi


def check_bandwidth_constraint(p: PlantParams, o: ObserverConfig) -> DesignVerdict:
    """Evaluate alpha*g_dob <= g_v/2 and the equivalent damping statement.

    kappa is always derived as g_v/g_dob, never stored independently.  The
    damping threshold is compared against 1/sqrt(2) exactly; 0.707 is treated
    as its conventional rounding.
    """
    a = alpha(p)
    kappa = o.g_v / o.g_dob
    w_n, xi = second_order_params(a, kappa, o.g_dob)
    lhs = a * o.g_dob
    rhs = 0.5 * o.g_v
    margin = rhs - lhs
    return DesignVerdict(
        alpha=a, kappa=kappa, w_n=w_n, xi=xi,
        constraint_lhs=lhs, constraint_rhs=rhs,
        satisfied=lhs <= rhs, margin=margin,
    )


def load_param_file(path: str | Path) -> dict[str, float]:
    """Load a parameter config file carrying exactly the keys in PARAM_KEYS.

    Strict: missing keys, unknown keys and non-numeric values are all
    reported together.
    """
    raw = parse_kv_text(Path(path).read_text(encoding="utf-8"))
    return params_from_strings(raw)


def params_from_strings(raw: dict[str, str]) -> dict[str, float]:
    """Validate and convert a raw key->string mapping to the 15 float parameters."""
    problems: list[str] = []
    for key in PARAM_KEYS:
        if key not in raw:
            problems.append(f"missing key {key!r}")
    for key in raw:
        if key not in PARAM_KEYS:
            problems.append(f"unknown key {key!r}")
    values: dict[str, float] = {}
    for key in PARAM_KEYS:
        if key in raw:
            try:
                values[key] = float(raw[key])
            except ValueError:
                problems.append(f"key {key!r}: not a number: {raw[key]!r}")
    if problems:
        raise ConfigError(problems)
    return values
