"""Nonlinear fixed-step time-domain simulation of the two experiments.

The position experiment closes the PD outer loop over the disturbance
observer; the contact experiment closes the proportional force loop over the
reaction-force observer against a unilateral spring-damper wall.  Both use a
classical 4th-order Runge-Kutta integrator at a fixed step; the controller is
evaluated inside the derivative function, so the closed loop is a smooth ODE
except at reference switch times and contact transitions.

The low-pass observers are realized in proper single-state form so the noisy
velocity signal is never differentiated:

    z' = g * (K I_m + g J v_meas - z),    F_hat = z - g J v_meas

which is algebraically [g/(s+g)] (K I_m - J s v_meas).  Observer states are
initialized consistently with the initial velocity, so a quiescent start is
an exact equilibrium.

Velocity noise is zero-mean Gaussian, seeded, injected on the raw velocity
before the measurement filter and held constant within each step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .loop_builder import Environment, PositionGains
from .observer_model import ObserverConfig, PlantParams
from .poly_tf import TransferFunction


class DivergenceError(RuntimeError):
    """State left the finite range during integration; carries the time."""

    def __init__(self, t: float):
        self.t = t
        super().__init__(f"simulation diverged at t={t:.6g} s")


@dataclass(frozen=True)
class SimConfig:
    """Fixed-step integration settings.  RK4 is the only v1 integrator."""

    dt: float
    duration: float
    seed: int = 0
    noise_std: float = 0.0
    integrator: str = "rk4"

    def __post_init__(self):
        bad = []
        if not self.dt > 0:
            bad.append("dt must be > 0")
        if not self.duration >= 10 * self.dt:
            bad.append("duration must be at least 10*dt")
        if self.noise_std < 0:
            bad.append("noise_std must be >= 0")
        if self.integrator != "rk4":
            bad.append(f"unknown integrator {self.integrator!r}")
        if bad:
            raise ValueError("; ".join(bad))

    def check_filter_resolution(self, obs: ObserverConfig) -> None:
        # Fastest filter must be resolved by the step.
        g = max(obs.g_dob, obs.g_rfob, obs.g_v)
        if self.dt * g > 0.5:
            raise ValueError(
                f"dt*max cutoff = {self.dt * g:.3g} exceeds 0.5; reduce dt"
            )


@dataclass(frozen=True)
class FrictionModel:
    """Smooth Coulomb + viscous friction: c*tanh(v/v_s) + b*v."""

    coulomb: float = 0.0
    viscous: float = 0.0
    smoothing_velocity: float = 1e-3

    def __post_init__(self):
        if self.coulomb < 0 or self.viscous < 0:
            raise ValueError("friction coefficients must be >= 0")
        if self.coulomb > 0 and not self.smoothing_velocity > 0:
            raise ValueError("smoothing_velocity must be > 0 when coulomb > 0")

    def force(self, v: float) -> float:
        f = self.viscous * v
        if self.coulomb > 0:
            f += self.coulomb * math.tanh(v / self.smoothing_velocity)
        return f


NO_FRICTION = FrictionModel()


@dataclass(frozen=True)
class SinusoidReference:
    """Position reference A*sin(2 pi f (t-t_start)) active on [t_start, t_end]."""

    amplitude: float
    freq_hz: float
    t_start: float = 0.0
    t_end: float = math.inf

    def value(self, t: float) -> float:
        if self.t_start <= t <= self.t_end:
            return self.amplitude * math.sin(2 * math.pi * self.freq_hz * (t - self.t_start))
        return 0.0

    def rate(self, t: float) -> float:
        if self.t_start <= t <= self.t_end:
            w = 2 * math.pi * self.freq_hz
            return self.amplitude * w * math.cos(w * (t - self.t_start))
        return 0.0

    def accel(self, t: float) -> float:
        if self.t_start <= t <= self.t_end:
            w = 2 * math.pi * self.freq_hz
            return -self.amplitude * w * w * math.sin(w * (t - self.t_start))
        return 0.0


@dataclass(frozen=True)
class StepForceReference:
    """Force reference stepping from 0 to magnitude at t_step."""

    magnitude: float
    t_step: float = 0.0

    def value(self, t: float) -> float:
        return self.magnitude if t >= self.t_step else 0.0


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled simulation record."""

    t: np.ndarray
    q_m: np.ndarray
    qdot_m: np.ndarray
    v_meas: np.ndarray
    I_m: np.ndarray
    F_dis_hat: np.ndarray
    F_l_hat: np.ndarray
    F_l_true: np.ndarray
    contact: np.ndarray


TRAJECTORY_CSV_HEADER = "t,q_m,qdot_m,v_meas,I_m,F_dis_hat,F_l_hat,F_l_true,contact"


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Trajectory CSV: fixed header, full double precision, newline-terminated."""
    cols = (traj.t, traj.q_m, traj.qdot_m, traj.v_meas, traj.I_m,
            traj.F_dis_hat, traj.F_l_hat, traj.F_l_true)
    lines = [TRAJECTORY_CSV_HEADER]
    for i in range(traj.t.size):
        vals = ",".join(repr(float(c[i])) for c in cols)
        lines.append(f"{vals},{int(traj.contact[i])}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _noise_sequence(sim: SimConfig, n_steps: int) -> np.ndarray:
    if sim.noise_std > 0:
        rng = np.random.default_rng(sim.seed)
        return rng.normal(0.0, sim.noise_std, n_steps)
    return np.zeros(n_steps)


def simulate_position(
    plant: PlantParams,
    obs: ObserverConfig,
    gains: PositionGains,
    reference: SinusoidReference,
    friction: FrictionModel,
    sim: SimConfig,
    q0: float = 0.0,
    qd0: float = 0.0,
) -> Trajectory:
    """Integrate the observer-based position loop tracking the reference.

    The outer loop commands qdd_des = qdd_ref + K_D(qd_ref - v_meas) +
    K_p(q_ref - q); the observer compensation current is added on top.
    Deterministic given the seed.
    """
    sim.check_filter_resolution(obs)
    dt = sim.dt
    n_steps = int(math.floor(sim.duration / dt))
    noise = _noise_sequence(sim, n_steps)

    J_m, K_tau = plant.J_m, plant.K_tau
    J_mn, K_tau_n = plant.J_mn, plant.K_tau_n
    g_dob, g_v = obs.g_dob, obs.g_v
    K_p, K_D = gains.K_p, gains.K_D
    gJ = g_dob * J_mn
    Jn_over_Kn = J_mn / K_tau_n

    def control(t, q, qd, vf, z):
        f_hat = z - gJ * vf
        qdd_des = (
            reference.accel(t)
            + K_D * (reference.rate(t) - vf)
            + K_p * (reference.value(t) - q)
        )
        i_m = Jn_over_Kn * qdd_des + f_hat / K_tau_n
        return i_m, f_hat

    def rhs(t, q, qd, vf, z, nk):
        i_m, _ = control(t, q, qd, vf, z)
        qdd = (K_tau * i_m - friction.force(qd)) / J_m
        dvf = g_v * (qd + nk - vf)
        dz = g_dob * (K_tau_n * i_m + gJ * vf - z)
        return qd, qdd, dvf, dz

    n = n_steps + 1
    out = {k: np.empty(n) for k in ("q", "qd", "vf", "im", "fd")}
    q, qd = q0, qd0
    vf = qd0
    z = gJ * qd0  # estimator starts converged: F_dis_hat(0) = 0
    half = 0.5 * dt
    sixth = dt / 6.0
    for k in range(n_steps + 1):
        t = k * dt
        i_m, f_hat = control(t, q, qd, vf, z)
        out["q"][k] = q
        out["qd"][k] = qd
        out["vf"][k] = vf
        out["im"][k] = i_m
        out["fd"][k] = f_hat
        if k == n_steps:
            break
        nk = noise[k]
        a1 = rhs(t, q, qd, vf, z, nk)
        a2 = rhs(t + half, q + half * a1[0], qd + half * a1[1], vf + half * a1[2], z + half * a1[3], nk)
        a3 = rhs(t + half, q + half * a2[0], qd + half * a2[1], vf + half * a2[2], z + half * a2[3], nk)
        a4 = rhs(t + dt, q + dt * a3[0], qd + dt * a3[1], vf + dt * a3[2], z + dt * a3[3], nk)
        q += sixth * (a1[0] + 2 * a2[0] + 2 * a3[0] + a4[0])
        qd += sixth * (a1[1] + 2 * a2[1] + 2 * a3[1] + a4[1])
        vf += sixth * (a1[2] + 2 * a2[2] + 2 * a3[2] + a4[2])
        z += sixth * (a1[3] + 2 * a2[3] + 2 * a3[3] + a4[3])
        if not (abs(q) + abs(qd) + abs(vf) + abs(z) < 1e30):
            raise DivergenceError((k + 1) * dt)

    zeros = np.zeros(n)
    return Trajectory(
        t=np.arange(n) * dt,
        q_m=out["q"], qdot_m=out["qd"], v_meas=out["vf"], I_m=out["im"],
        F_dis_hat=out["fd"], F_l_hat=zeros, F_l_true=zeros,
        contact=np.zeros(n, dtype=np.int64),
    )


def simulate_force(
    plant: PlantParams,
    obs: ObserverConfig,
    c_f: float,
    reference: StepForceReference,
    env: Environment,
    friction: FrictionModel,
    sim: SimConfig,
    q0: float = 0.0,
    qd0: float = 0.0,
) -> Trajectory:
    """Integrate the force loop against the unilateral spring-damper wall.

    Contact force is max(0, K_env(q - q_e) + D_env qd) while q > q_e and zero
    otherwise (the wall pushes, never pulls).  Deterministic given the seed.
    """
    sim.check_filter_resolution(obs)
    dt = sim.dt
    n_steps = int(math.floor(sim.duration / dt))
    noise = _noise_sequence(sim, n_steps)

    J_m, K_tau = plant.J_m, plant.K_tau
    J_mn, K_tau_n = plant.J_mn, plant.K_tau_n
    g_dob, g_rfob, g_v = obs.g_dob, obs.g_rfob, obs.g_v
    K_hat, J_hat = obs.K_tau_hat, obs.J_hat
    D_env, K_env, q_e = env.D_env, env.K_env, env.q_e
    gJd = g_dob * J_mn
    gJr = g_rfob * J_hat
    Jn_over_Kn = J_mn / K_tau_n

    def wall(q, qd):
        if q > q_e:
            f = K_env * (q - q_e) + D_env * qd
            return f if f > 0 else 0.0
        return 0.0

    def control(t, vf, zd, zr):
        f_dis_hat = zd - gJd * vf
        f_l_hat = zr - gJr * vf
        qdd_des = c_f * (reference.value(t) - f_l_hat)
        i_m = Jn_over_Kn * qdd_des + f_dis_hat / K_tau_n
        return i_m, f_dis_hat, f_l_hat

    def rhs(t, q, qd, vf, zd, zr, nk):
        i_m, _, _ = control(t, vf, zd, zr)
        qdd = (K_tau * i_m - friction.force(qd) - wall(q, qd)) / J_m
        dvf = g_v * (qd + nk - vf)
        dzd = g_dob * (K_tau_n * i_m + gJd * vf - zd)
        dzr = g_rfob * (K_hat * i_m + gJr * vf - zr)
        return qd, qdd, dvf, dzd, dzr

    n = n_steps + 1
    out = {k: np.empty(n) for k in ("q", "qd", "vf", "im", "fd", "fl", "ft")}
    contact = np.zeros(n, dtype=np.int64)
    q, qd = q0, qd0
    vf = qd0
    zd = gJd * qd0
    zr = gJr * qd0
    half = 0.5 * dt
    sixth = dt / 6.0
    for k in range(n_steps + 1):
        t = k * dt
        i_m, f_dis_hat, f_l_hat = control(t, vf, zd, zr)
        f_true = wall(q, qd)
        out["q"][k] = q
        out["qd"][k] = qd
        out["vf"][k] = vf
        out["im"][k] = i_m
        out["fd"][k] = f_dis_hat
        out["fl"][k] = f_l_hat
        out["ft"][k] = f_true
        contact[k] = 1 if q > q_e else 0
        if k == n_steps:
            break
        nk = noise[k]
        a1 = rhs(t, q, qd, vf, zd, zr, nk)
        a2 = rhs(t + half, q + half * a1[0], qd + half * a1[1], vf + half * a1[2],
                 zd + half * a1[3], zr + half * a1[4], nk)
        a3 = rhs(t + half, q + half * a2[0], qd + half * a2[1], vf + half * a2[2],
                 zd + half * a2[3], zr + half * a2[4], nk)
        a4 = rhs(t + dt, q + dt * a3[0], qd + dt * a3[1], vf + dt * a3[2],
                 zd + dt * a3[3], zr + dt * a3[4], nk)
        q += sixth * (a1[0] + 2 * a2[0] + 2 * a3[0] + a4[0])
        qd += sixth * (a1[1] + 2 * a2[1] + 2 * a3[1] + a4[1])
        vf += sixth * (a1[2] + 2 * a2[2] + 2 * a3[2] + a4[2])
        zd += sixth * (a1[3] + 2 * a2[3] + 2 * a3[3] + a4[3])
        zr += sixth * (a1[4] + 2 * a2[4] + 2 * a3[4] + a4[4])
        if not (abs(q) + abs(qd) + abs(vf) + abs(zd) + abs(zr) < 1e30):
            raise DivergenceError((k + 1) * dt)

    return Trajectory(
        t=np.arange(n) * dt,
        q_m=out["q"], qdot_m=out["qd"], v_meas=out["vf"], I_m=out["im"],
        F_dis_hat=out["fd"], F_l_hat=out["fl"], F_l_true=out["ft"],
        contact=contact,
    )


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResponseMetrics:
    overshoot: float
    settling_time: float
    steady_state_error: float
    oscillation_index: float
    velocity_noise_rms: float


def noise_rms(x: np.ndarray) -> float:
    """High-frequency noise level of a sampled signal.

    First differences kill smooth trends; for white noise of std sigma the
    rms of the differences is sigma*sqrt(2).
    """
    d = np.diff(np.asarray(x, dtype=float))
    if d.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(d * d) / 2.0))


def compute_metrics(
    traj: Trajectory,
    reference,
    window: tuple[float, float],
) -> ResponseMetrics:
    """Step/tracking response metrics over [t0, t1].

    The analyzed signal is chosen by the reference kind: position (q_m)
    against a SinusoidReference, estimated force (F_l_hat) against a
    StepForceReference.  Settling time is measured from the window start to
    the last sample outside the 2% band of the final reference value; the
    oscillation index is the variance of the late-window (last half) error
    divided by the squared reference scale.
    """
    t0, t1 = window
    if not (t0 < t1):
        raise ValueError("window must satisfy t0 < t1")
    if t0 < traj.t[0] - 1e-12 or t1 > traj.t[-1] + 1e-12:
        raise ValueError("window outside trajectory span")
    mask = (traj.t >= t0) & (traj.t <= t1)
    if not np.any(mask):
        raise ValueError("window contains no samples")
    t = traj.t[mask]

    if isinstance(reference, StepForceReference):
        y = traj.F_l_hat[mask]
        ref = np.array([reference.value(x) for x in t])
        scale = abs(reference.magnitude)
    elif isinstance(reference, SinusoidReference):
        y = traj.q_m[mask]
        ref = np.array([reference.value(x) for x in t])
        scale = abs(reference.amplitude)
    else:
        raise TypeError(f"unsupported reference spec: {type(reference).__name__}")
    if scale == 0.0:
        scale = 1.0

    ref_final = ref[-1]
    overshoot = max(0.0, (float(np.max(y)) - ref_final) / scale)

    outside = np.abs(y - ref_final) > 0.02 * scale
    settling_time = float(t[outside][-1] - t[0]) if np.any(outside) else 0.0

    n_tail = max(1, y.size // 10)
    steady_state_error = abs(float(np.mean(y[-n_tail:])) - ref_final)

    half = y.size // 2
    err_late = y[half:] - ref[half:]
    oscillation_index = float(np.var(err_late)) / (scale * scale)

    velocity_noise_rms = float(
        np.sqrt(np.mean((traj.v_meas[mask] - traj.qdot_m[mask]) ** 2))
    )
    return ResponseMetrics(
        overshoot=overshoot,
        settling_time=settling_time,
        steady_state_error=steady_state_error,
        oscillation_index=oscillation_index,
        velocity_noise_rms=velocity_noise_rms,
    )


def sinusoid_error_amplitude(
    traj: Trajectory, reference: SinusoidReference, t0: float, periods: int = 2
) -> float:
    """Amplitude of the steady-state tracking error at the reference frequency.

    Projects q_ref - q_m onto sin/cos at the reference frequency over an
    integer number of periods starting at t0 (Fourier coefficient), which is
    robust to small numeric noise and offsets.
    """
    w = 2 * math.pi * reference.freq_hz
    t1 = t0 + periods * 2 * math.pi / w
    mask = (traj.t >= t0) & (traj.t <= t1)
    t = traj.t[mask]
    err = np.array([reference.value(x) for x in t]) - traj.q_m[mask]
    span = t[-1] - t[0]
    a = 2.0 / span * np.trapezoid(err * np.sin(w * (t - reference.t_start)), t)
    b = 2.0 / span * np.trapezoid(err * np.cos(w * (t - reference.t_start)), t)
    return float(math.hypot(a, b))


def linear_step_response(tf: TransferFunction, dt: float, n_samples: int,
                         amplitude: float = 1.0) -> np.ndarray:
    """Step response of a strictly proper transfer function on a fixed grid.

    Integrates the controllable-canonical ODE realization with the same RK4
    scheme the simulators use; serves as the linear oracle for small-signal
    comparisons.
    """
    den = tf.den.coeffs
    num = tf.num.coeffs
    order = len(den) - 1
    if order < 1 or len(num) > order:
        raise ValueError("need a strictly proper transfer function")
    a = np.array(den[:-1], dtype=float)  # monic den assumed by construction
    b = np.zeros(order)
    b[: len(num)] = num
    x = np.zeros(order)

    def deriv(x):
        dx = np.empty(order)
        dx[:-1] = x[1:]
        dx[-1] = amplitude - a @ x
        return dx

    out = np.empty(n_samples)
    for k in range(n_samples):
        out[k] = b @ x
        k1 = deriv(x)
        k2 = deriv(x + 0.5 * dt * k1)
        k3 = deriv(x + 0.5 * dt * k2)
        k4 = deriv(x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return out
