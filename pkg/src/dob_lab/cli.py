"""Batch front end: scenario configs in, CSV/SVG artifacts out.

Usage: ``dob-lab <kind> --config <path> [--out <dir>]``.  Scenario kinds are
the subcommand names below; configs are flat ``key = value`` files (see
kvconfig).  Exit codes: 0 success, 2 config error, 3 numeric failure,
4 I/O failure.  ``DOB_LAB_THREADS`` caps sweep parallelism.

CSV column contracts: locus ``gain,branch,re,im``; map ``param,value,stable``;
bode ``omega,mag_db,phase_deg``; trajectories per time_sim.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import loop_builder, observer_model, stability, time_sim
from .kvconfig import ConfigError, parse_kv_text, serialize_kv
from .loop_builder import Environment, PositionGains
from .observer_model import ObserverConfig, PlantParams, PARAM_KEYS
from .poly_tf import (
    AlgebraicDegeneracyError,
    DegenerateInputError,
    PoleEvaluationError,
    Polynomial,
    TransferFunction,
    frequency_sweep,
    poly_roots,
)
from .svg_plot import AxesSpec, PlotDataError, emit_svg_plot
from .time_sim import (
    DivergenceError,
    FrictionModel,
    SimConfig,
    SinusoidReference,
    StepForceReference,
    write_trajectory_csv,
)

NUMERIC_ERRORS = (
    DegenerateInputError,
    AlgebraicDegeneracyError,
    PoleEvaluationError,
    DivergenceError,
    loop_builder.NoContactError,
    PlotDataError,
    np.linalg.LinAlgError,
    FloatingPointError,
)

_SIM_KEYS = ("sim.dt", "sim.duration", "sim.seed", "sim.noise_std")
_FRICTION_KEYS = ("friction.coulomb", "friction.viscous", "friction.smoothing_velocity")

#: Required key set per scenario kind (strict: no unknown keys).
KIND_KEYS: dict[str, tuple[str, ...]] = {
    "constraint-check": PARAM_KEYS,
    "bode": ("num", "den", "omega_min", "omega_max", "points_per_decade"),
    "position-tf": PARAM_KEYS + ("ideal_velocity",),
    "force-tf": PARAM_KEYS,
    "routh": ("polynomial",),
    "locus": PARAM_KEYS + ("locus.gain_min", "locus.gain_max", "locus.points"),
    "map": PARAM_KEYS + ("map.param", "map.min", "map.max", "map.points", "map.scale"),
    "simulate-position": PARAM_KEYS + _SIM_KEYS + _FRICTION_KEYS
    + ("ref.amplitude", "ref.freq_hz", "ref.t_start", "ref.t_end"),
    "simulate-force": PARAM_KEYS + _SIM_KEYS + _FRICTION_KEYS
    + ("fref.step", "fref.t_step"),
    "reproduce-figure": ("figure",),
}

FIGURES = ("fig3", "fig7", "fig8", "fig9", "fig10")


@dataclass(frozen=True)
class Scenario:
    kind: str
    parameters: dict[str, str] = field(default_factory=dict)
    output_dir: Path = Path("out")


def parse_scenario(kind: str, config_text: str, output_dir: Path) -> Scenario:
    """Strict scenario parse: reports every violation at once."""
    if kind not in KIND_KEYS:
        raise ConfigError([f"unknown scenario kind {kind!r}"])
    raw = parse_kv_text(config_text)
    required = KIND_KEYS[kind]
    problems = [f"missing key {k!r}" for k in required if k not in raw]
    problems += [f"unknown key {k!r} for kind {kind!r}" for k in raw if k not in required]
    if kind == "reproduce-figure" and raw.get("figure") not in (None,) + FIGURES:
        problems.append(f"figure must be one of {FIGURES}, got {raw.get('figure')!r}")
    if problems:
        raise ConfigError(problems)
    return Scenario(kind=kind, parameters=dict(raw), output_dir=output_dir)


def serialize_scenario(s: Scenario) -> str:
    return serialize_kv(s.parameters)


# ---------------------------------------------------------------------------
# small helpers
# ---------------------------------------------------------------------------

def _sci(x: float, digits: int = 3) -> str:
    """Compact scientific form: 0 -> 0.000e0, -700 -> -7.000e2."""
    if x == 0:
        return f"{0:.{digits}f}e0"
    exp = int(math.floor(math.log10(abs(x))))
    mant = x / 10.0 ** exp
    if abs(mant) >= 10.0:  # rounding pushed it over
        mant /= 10.0
        exp += 1
    return f"{mant:.{digits}f}e{exp}"


def _floats(s: Scenario, keys) -> dict[str, float]:
    problems, out = [], {}
    for k in keys:
        try:
            out[k] = float(s.parameters[k])
        except ValueError:
            problems.append(f"key {k!r}: not a number: {s.parameters[k]!r}")
    if problems:
        raise ConfigError(problems)
    return out


def _bool(s: Scenario, key: str) -> bool:
    v = s.parameters[key].strip().lower()
    if v in ("true", "1", "yes"):
        return True
    if v in ("false", "0", "no"):
        return False
    raise ConfigError([f"key {key!r}: expected true/false, got {v!r}"])


def _build_models(params: dict[str, float]):
    plant = PlantParams.from_mapping(params)
    obs = ObserverConfig.from_mapping(params)
    gains = PositionGains.from_mapping(params)
    env = Environment.from_mapping(params)
    return plant, obs, gains, env


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    lines.extend(",".join(str(c) for c in row) for row in rows)
    _write_text(path, "\n".join(lines) + "\n")


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("DOB_LAB_THREADS", "1")))
    except ValueError:
        return 1


def _poly_report(label: str, p: Polynomial) -> str:
    return f"{label}: {p.to_string()}"


def _roots_report(label: str, roots) -> str:
    inner = "; ".join(f"{r.real:.6g}{r.imag:+.6g}j" for r in roots)
    return f"{label}: {inner}"


# ---------------------------------------------------------------------------
# scenario runners
# ---------------------------------------------------------------------------

def _run_constraint_check(s: Scenario, out: Path) -> list[Path]:
    params = _floats(s, PARAM_KEYS)
    plant, obs, _, _ = _build_models(params)
    v = observer_model.check_bandwidth_constraint(plant, obs)
    status = "SATISFIED" if v.satisfied else "VIOLATED"
    line = f"{status} margin={_sci(v.margin)} rad/s xi={v.xi:.5f}"
    print(line)
    path = out / "constraint.txt"
    _write_text(path, line + "\n")
    return [path]


def _run_bode(s: Scenario, out: Path) -> list[Path]:
    vals = _floats(s, ("omega_min", "omega_max", "points_per_decade"))
    tf = TransferFunction(
        Polynomial.from_string(s.parameters["num"]),
        Polynomial.from_string(s.parameters["den"]),
    )
    points = frequency_sweep(
        tf, vals["omega_min"], vals["omega_max"], int(vals["points_per_decade"])
    )
    csv = out / "bode.csv"
    _write_csv(csv, "omega,mag_db,phase_deg",
               ((repr(p.omega), repr(p.magnitude_db), repr(p.phase_deg)) for p in points))
    svg = out / "bode.svg"
    _write_text(svg, emit_svg_plot(
        [("magnitude [dB]", [p.omega for p in points], [p.magnitude_db for p in points])],
        AxesSpec(title="frequency response", xlabel="omega [rad/s]",
                 ylabel="magnitude [dB]", xlog=True),
    ))
    return [csv, svg]


def _run_position_tf(s: Scenario, out: Path) -> list[Path]:
    params = _floats(s, PARAM_KEYS)
    ideal = _bool(s, "ideal_velocity")
    plant, obs, gains, _ = _build_models(params)
    a = observer_model.alpha(plant)
    composed = loop_builder.compose_position_loop(plant, obs, gains, ideal_velocity=ideal)
    lines = [f"alpha = {a!r}", f"ideal_velocity = {ideal}"]
    if ideal:
        printed = loop_builder.position_loop_ideal(a, obs.g_dob, gains)
        char = loop_builder.position_char_poly_ideal(a, obs.g_dob, gains)
        lines += [
            _poly_report("printed numerator", printed.num),
            _poly_report("printed denominator", printed.den),
            _poly_report("printed characteristic polynomial", char),
            _roots_report("characteristic roots", poly_roots(char)),
        ]
    else:
        printed = loop_builder.position_loop_finite_gv(a, obs.g_dob, obs.g_v, gains)
        cmp = loop_builder.finite_gv_comparison(a, obs.g_dob, obs.g_v, gains)
        lines += [
            _poly_report("printed numerator", printed.num),
            _poly_report("printed denominator", printed.den),
            cmp.summary(),
        ]
    lines += [
        _poly_report("composed numerator", composed.num),
        _poly_report("composed denominator", composed.den),
    ]
    path = out / "position_tf.txt"
    _write_text(path, "\n".join(lines) + "\n")
    return [path]


def _run_force_tf(s: Scenario, out: Path) -> list[Path]:
    params = _floats(s, PARAM_KEYS)
    plant, obs, _, env = _build_models(params)
    model = loop_builder.compose_force_loop(plant, obs, env, params["C_f"])
    lines = [
        _poly_report("loop gain numerator (per unit C_f)", model.open_loop.num),
        _poly_report("loop gain denominator", model.open_loop.den),
        _roots_report("loop zeros", model.zeros),
        _roots_report("loop poles", model.poles),
        _poly_report("closed loop numerator", model.closed_loop.num),
        _poly_report("closed loop denominator", model.closed_loop.den),
        f"true-force DC ratio = "
        f"{model.true_force_tf.num.coeffs[0] / model.true_force_tf.den.coeffs[0]!r}",
    ]
    path = out / "force_tf.txt"
    _write_text(path, "\n".join(lines) + "\n")
    return [path]


def _run_routh(s: Scenario, out: Path) -> list[Path]:
    p = Polynomial.from_string(s.parameters["polynomial"])
    rep = stability.routh_hurwitz(p)
    verdict = "STABLE" if rep.stable else ("MARGINAL" if rep.degenerate else "UNSTABLE")
    line = f"{verdict} rhp={rep.rhp_count}"
    print(line)
    body = [line, "routh array:"]
    body += ["  " + " ".join(repr(x) for x in row) for row in rep.array]
    path = out / "routh.txt"
    _write_text(path, "\n".join(body) + "\n")
    return [path]


def _locus_rows(result: stability.RootLocusResult):
    for i, k in enumerate(result.branches[0].gains):
        for b, branch in enumerate(result.branches):
            pt = branch.points[i]
            yield (repr(k), b, repr(pt.real), repr(pt.imag))


def _locus_svg(result: stability.RootLocusResult, title: str) -> str:
    series = [
        (f"branch {i}", [p.real for p in b.points], [p.imag for p in b.points])
        for i, b in enumerate(result.branches)
    ]
    return emit_svg_plot(series, AxesSpec(title=title, xlabel="Re [1/s]", ylabel="Im [1/s]"))


def _run_locus(s: Scenario, out: Path) -> list[Path]:
    params = _floats(s, PARAM_KEYS)
    vals = _floats(s, ("locus.gain_min", "locus.gain_max", "locus.points"))
    plant, obs, _, env = _build_models(params)
    grid = np.logspace(math.log10(vals["locus.gain_min"]),
                       math.log10(vals["locus.gain_max"]), int(vals["locus.points"]))
    result = stability.force_loop_critical_gain(plant, obs, env, grid)
    print(f"critical_gain={'none' if result.critical_gain is None else repr(result.critical_gain)}")
    csv = out / "locus.csv"
    _write_csv(csv, "gain,branch,re,im", _locus_rows(result))
    svg = out / "locus.svg"
    _write_text(svg, _locus_svg(result, "force-loop root locus"))
    return [csv, svg]


def _run_map(s: Scenario, out: Path) -> list[Path]:
    params = _floats(s, PARAM_KEYS)
    vals = _floats(s, ("map.min", "map.max", "map.points"))
    name = s.parameters["map.param"]
    scale = s.parameters["map.scale"]
    if name not in stability.SWEEP_PARAMETERS:
        raise ConfigError(
            [f"map.param must be one of {stability.SWEEP_PARAMETERS}, got {name!r}"])
    if scale not in ("log", "lin"):
        raise ConfigError([f"map.scale must be log or lin, got {scale!r}"])
    n = int(vals["map.points"])
    if scale == "log":
        grid = np.logspace(math.log10(vals["map.min"]), math.log10(vals["map.max"]), n)
    else:
        grid = np.linspace(vals["map.min"], vals["map.max"], n)
    result = stability.stability_map(name, grid, params, threads=_threads())
    csv = out / "map.csv"
    _write_csv(csv, "param,value,stable",
               ((name, repr(v), int(st)) for v, st in zip(result.values, result.stable)))
    svg = out / "map.svg"
    _write_text(svg, emit_svg_plot(
        [("stable", list(result.values), [float(x) for x in result.stable])],
        AxesSpec(title=f"stability vs {name}", xlabel=name, ylabel="stable",
                 xlog=(scale == "log")),
    ))
    for b in result.boundaries:
        print(f"boundary {name}={b!r}")
    return [csv, svg]


def _sim_config(s: Scenario) -> SimConfig:
    v = _floats(s, _SIM_KEYS)
    return SimConfig(dt=v["sim.dt"], duration=v["sim.duration"],
                     seed=int(v["sim.seed"]), noise_std=v["sim.noise_std"])


def _friction(s: Scenario) -> FrictionModel:
    v = _floats(s, _FRICTION_KEYS)
    return FrictionModel(coulomb=v["friction.coulomb"], viscous=v["friction.viscous"],
                         smoothing_velocity=v["friction.smoothing_velocity"])


def _trajectory_svg(traj, series_extra, title) -> str:
    t = traj.t.tolist()
    series = [(name, t, list(vals)) for name, vals in series_extra]
    return emit_svg_plot(series, AxesSpec(title=title, xlabel="t [s]"))


def _run_simulate_position(s: Scenario, out: Path) -> list[Path]:
    params = _floats(s, PARAM_KEYS)
    rv = _floats(s, ("ref.amplitude", "ref.freq_hz", "ref.t_start", "ref.t_end"))
    plant, obs, gains, _ = _build_models(params)
    ref = SinusoidReference(rv["ref.amplitude"], rv["ref.freq_hz"],
                            rv["ref.t_start"], rv["ref.t_end"])
    traj = time_sim.simulate_position(plant, obs, gains, ref, _friction(s), _sim_config(s))
    csv = out / "trajectory.csv"
    write_trajectory_csv(traj, csv)
    svg = out / "trajectory.svg"
    qref = [ref.value(x) for x in traj.t]
    _write_text(svg, _trajectory_svg(
        traj,
        [("q_ref [rad]", qref), ("q_m [rad]", traj.q_m.tolist()), ("I_m [A]", traj.I_m.tolist())],
        "position experiment",
    ))
    return [csv, svg]


def _run_simulate_force(s: Scenario, out: Path) -> list[Path]:
    params = _floats(s, PARAM_KEYS)
    rv = _floats(s, ("fref.step", "fref.t_step"))
    plant, obs, _, env = _build_models(params)
    ref = StepForceReference(rv["fref.step"], rv["fref.t_step"])
    traj = time_sim.simulate_force(plant, obs, params["C_f"], ref, env,
                                   _friction(s), _sim_config(s))
    csv = out / "trajectory.csv"
    write_trajectory_csv(traj, csv)
    svg = out / "trajectory.svg"
    fref = [ref.value(x) for x in traj.t]
    _write_text(svg, _trajectory_svg(
        traj,
        [("F_ref [N]", fref), ("F_l_hat [N]", traj.F_l_hat.tolist()),
         ("F_l [N]", traj.F_l_true.tolist())],
        "force experiment",
    ))
    return [csv, svg]


# ---------------------------------------------------------------------------
# figure bundles
# ---------------------------------------------------------------------------

def _fig3(out: Path) -> list[Path]:
    g_dob, g_v = 100.0, 1000.0
    alphas = (0.5, 1.0, 2.0, 4.0, 8.0)
    artifacts = []
    series = []
    for a in alphas:
        tf = loop_builder.sensitivity_tf(a, g_dob, g_v)
        pts = frequency_sweep(tf, 1.0, 1e5, 24)
        csv = out / f"fig3_alpha_{a:g}.csv"
        _write_csv(csv, "omega,mag_db,phase_deg",
                   ((repr(p.omega), repr(p.magnitude_db), repr(p.phase_deg)) for p in pts))
        artifacts.append(csv)
        series.append((f"alpha={a:g}", [p.omega for p in pts],
                       [p.magnitude_db for p in pts]))
    svg = out / "fig3.svg"
    _write_text(svg, emit_svg_plot(series, AxesSpec(
        title="inner-loop sensitivity magnitude", xlabel="omega [rad/s]",
        ylabel="magnitude [dB]", xlog=True)))
    artifacts.append(svg)
    return artifacts


def _fig7(out: Path) -> list[Path]:
    params = observer_model.default_params()
    grid = np.logspace(math.log10(0.01), math.log10(10.0), 161)
    result = stability.stability_map("alpha", grid, params, threads=_threads())
    csv = out / "fig7.csv"
    _write_csv(csv, "param,value,stable",
               (("alpha", repr(v), int(st)) for v, st in zip(result.values, result.stable)))
    svg = out / "fig7.svg"
    _write_text(svg, emit_svg_plot(
        [("stable", list(result.values), [float(x) for x in result.stable])],
        AxesSpec(title="position-loop stability vs alpha", xlabel="alpha",
                 ylabel="stable", xlog=True)))
    gains = PositionGains.from_mapping(params)
    astar = stability.third_order_alpha_condition(params["g_dob"], gains)
    txt = out / "fig7_boundary.txt"
    lines = [f"closed-form critical alpha = {astar!r}"]
    lines += [f"map boundary estimate = {b!r}" for b in result.boundaries]
    _write_text(txt, "\n".join(lines) + "\n")
    return [csv, svg, txt]


def _fig8(out: Path) -> list[Path]:
    params = observer_model.default_params()
    plant, obs, _, env = _build_models(params)
    grid = np.logspace(1, 6, 161)
    artifacts = []
    summary = []
    for tag, g_rfob in (("a", obs.g_dob), ("b", 3.0 * obs.g_dob)):
        o = ObserverConfig(g_dob=obs.g_dob, g_rfob=g_rfob, g_v=obs.g_v,
                           J_hat=obs.J_hat, K_tau_hat=obs.K_tau_hat)
        result = stability.force_loop_critical_gain(plant, o, env, grid)
        csv = out / f"fig8{tag}.csv"
        _write_csv(csv, "gain,branch,re,im", _locus_rows(result))
        svg = out / f"fig8{tag}.svg"
        _write_text(svg, _locus_svg(result, f"force-loop locus, g_rfob={g_rfob:g}"))
        artifacts += [csv, svg]
        crit = "none" if result.critical_gain is None else repr(result.critical_gain)
        summary.append(f"case {tag} (g_rfob={g_rfob:g}): critical C_f = {crit}")
    txt = out / "fig8_summary.txt"
    _write_text(txt, "\n".join(summary) + "\n")
    artifacts.append(txt)
    return artifacts


#: Frozen scenario constants for the two experiment reproductions.
FIG9_SETTINGS = dict(seed=20240601, noise_std=0.02, dt=1e-4, duration=11.0,
                     amplitude=0.1, freq_hz=1.0, t_start=1.0, t_end=10.0,
                     coulomb=0.5, viscous=0.1, smoothing=1e-3)
FIG10_SETTINGS = dict(dt=1e-4, duration=3.0, step=5.0, t_step=1.0, c_f=700.0)
FIG10_CASES = (("a", 1.0, 1.0), ("b", 0.7, 3.0), ("c", 1.5, 3.0))  # tag, J_hat/J_m, g_rfob/g_dob


def _fig9(out: Path) -> list[Path]:
    params = observer_model.default_params()
    f9 = FIG9_SETTINGS
    obs = ObserverConfig.from_mapping(params)
    gains = PositionGains.from_mapping(params)
    ref = SinusoidReference(f9["amplitude"], f9["freq_hz"], f9["t_start"], f9["t_end"])
    fric = FrictionModel(f9["coulomb"], f9["viscous"], f9["smoothing"])
    sim = SimConfig(dt=f9["dt"], duration=f9["duration"], seed=f9["seed"],
                    noise_std=f9["noise_std"])
    artifacts = []
    summary = []
    for tag, ratio in (("nominal", 1.0), ("tripled", 3.0)):
        plant = PlantParams(J_m=params["J_m"], K_tau=params["K_tau"],
                            J_mn=ratio * params["J_m"], K_tau_n=params["K_tau_n"])
        traj = time_sim.simulate_position(plant, obs, gains, ref, fric, sim)
        csv = out / f"fig9_{tag}.csv"
        write_trajectory_csv(traj, csv)
        svg = out / f"fig9_{tag}.svg"
        qref = [ref.value(x) for x in traj.t]
        _write_text(svg, _trajectory_svg(
            traj, [("q_ref [rad]", qref), ("q_m [rad]", traj.q_m.tolist()),
                   ("I_m [A]", traj.I_m.tolist())],
            f"position response, J_mn = {ratio:g} J_m"))
        amp = time_sim.sinusoid_error_amplitude(traj, ref, t0=3.0, periods=6)
        mask = (traj.t >= 2.0) & (traj.t <= 9.0)
        inoise = time_sim.noise_rms(traj.I_m[mask])
        summary.append(f"case {tag}: tracking error amplitude = {amp!r}, "
                       f"current noise rms = {inoise!r}")
        artifacts += [csv, svg]
    txt = out / "fig9_summary.txt"
    _write_text(txt, "\n".join(summary) + "\n")
    artifacts.append(txt)
    return artifacts


def _force_case_trajectory(plant, obs, env, fric, sim, ref):
    """Run a contact case; on divergence, deterministically re-run the
    longest finite prefix so the bundle still emits data."""
    try:
        return time_sim.simulate_force(plant, obs, FIG10_SETTINGS["c_f"], ref, env,
                                       fric, sim), False
    except DivergenceError as exc:
        short = SimConfig(dt=sim.dt, duration=max(10 * sim.dt, exc.t - 2 * sim.dt),
                          seed=sim.seed, noise_std=sim.noise_std)
        return time_sim.simulate_force(plant, obs, FIG10_SETTINGS["c_f"], ref, env,
                                       fric, short), True


def _fig10(out: Path) -> list[Path]:
    params = observer_model.default_params()
    f10 = FIG10_SETTINGS
    plant = PlantParams.from_mapping(params)
    env = Environment.from_mapping(params)
    ref = StepForceReference(f10["step"], f10["t_step"])
    sim = SimConfig(dt=f10["dt"], duration=f10["duration"])
    artifacts = []
    summary = []
    series = [("F_ref [N]", [0.0, f10["t_step"], f10["t_step"], f10["duration"]],
               [0.0, 0.0, f10["step"], f10["step"]])]
    for tag, j_ratio, g_ratio in FIG10_CASES:
        obs = ObserverConfig(g_dob=params["g_dob"], g_rfob=g_ratio * params["g_dob"],
                             g_v=params["g_v"], J_hat=j_ratio * params["J_m"],
                             K_tau_hat=params["K_tau_hat"])
        traj, diverged = _force_case_trajectory(plant, obs, env, time_sim.NO_FRICTION,
                                                sim, ref)
        csv = out / f"fig10_case_{tag}.csv"
        write_trajectory_csv(traj, csv)
        artifacts.append(csv)
        if diverged:
            summary.append(f"case {tag}: DIVERGED at t={traj.t[-1] + 2 * sim.dt!r} s "
                           f"(trajectory truncated)")
        else:
            m = time_sim.compute_metrics(traj, ref, (f10["t_step"], f10["duration"]))
            summary.append(f"case {tag}: oscillation_index = {m.oscillation_index!r}")
        series.append((f"case {tag}", traj.t.tolist(), traj.F_l_hat.tolist()))
    svg = out / "fig10.svg"
    _write_text(svg, emit_svg_plot(series, AxesSpec(
        title="force responses", xlabel="t [s]", ylabel="estimated force [N]")))
    artifacts.append(svg)
    txt = out / "fig10_summary.txt"
    _write_text(txt, "\n".join(summary) + "\n")
    artifacts.append(txt)
    return artifacts


def _run_reproduce(s: Scenario, out: Path) -> list[Path]:
    figure = s.parameters["figure"]
    return {"fig3": _fig3, "fig7": _fig7, "fig8": _fig8,
            "fig9": _fig9, "fig10": _fig10}[figure](out)


_RUNNERS = {
    "constraint-check": _run_constraint_check,
    "bode": _run_bode,
    "position-tf": _run_position_tf,
    "force-tf": _run_force_tf,
    "routh": _run_routh,
    "locus": _run_locus,
    "map": _run_map,
    "simulate-position": _run_simulate_position,
    "simulate-force": _run_simulate_force,
    "reproduce-figure": _run_reproduce,
}


class ScenarioFailure(RuntimeError):
    """Wraps a failure with the stage it happened in."""

    def __init__(self, stage: str, exc: BaseException):
        self.stage = stage
        self.cause = exc
        super().__init__(f"stage {stage}: {exc}")


def run_scenario(s: Scenario) -> list[Path]:
    """Execute a scenario, returning written artifact paths.

    Raises ConfigError for configuration problems, ScenarioFailure wrapping
    the original exception for numeric/I-O problems.
    """
    if s.kind not in _RUNNERS:
        raise ConfigError([f"unknown scenario kind {s.kind!r}"])
    try:
        s.output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ScenarioFailure("write", exc)
    try:
        return _RUNNERS[s.kind](s, s.output_dir)
    except ConfigError:
        raise
    except ValueError as exc:
        # invariant violations on parameter bundles are configuration errors
        if isinstance(exc, NUMERIC_ERRORS):
            raise ScenarioFailure("analyze", exc)
        raise ConfigError([str(exc)])
    except NUMERIC_ERRORS as exc:
        raise ScenarioFailure("analyze", exc)
    except OSError as exc:
        raise ScenarioFailure("write", exc)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dob-lab",
        description="observer-based motion control design and analysis scenarios",
    )
    parser.add_argument("kind", choices=sorted(KIND_KEYS))
    parser.add_argument("figure", nargs="?", default=None,
                        help="figure id shorthand for reproduce-figure")
    parser.add_argument("--config", type=Path, default=None)
    parser.add_argument("--out", type=Path, default=Path("out"))
    args = parser.parse_args(argv)

    try:
        if args.kind == "reproduce-figure" and args.figure is not None:
            text = f"figure = {args.figure}\n"
        elif args.config is not None:
            text = args.config.read_text(encoding="utf-8")
        else:
            print("error: --config is required", file=sys.stderr)
            return 2
        scenario = parse_scenario(args.kind, text, args.out)
        artifacts = run_scenario(scenario)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return 2
    except ScenarioFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4 if isinstance(exc.cause, OSError) else 3
    except OSError as exc:
        print(f"error: stage read: {exc}", file=sys.stderr)
        return 4
    for p in artifacts:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
