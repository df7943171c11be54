"""Design and analysis toolkit for disturbance-observer based motion control.

Submodules:
    poly_tf        polynomial / transfer-function algebra
    observer_model physical parameters, mismatch ratio, bandwidth constraint
    loop_builder   printed and block-derived loop transfer functions
    stability      Routh-Hurwitz, root loci, zero scans, parameter sweeps
    time_sim       nonlinear fixed-step simulations of both experiments
    svg_plot       deterministic SVG line plots
    cli            batch scenario front end (``dob-lab``)
"""

from .loop_builder import (
    Environment,
    ForceLoopModel,
    PositionGains,
    compose_force_loop,
    compose_position_loop,
    dob_open_loop,
    finite_gv_comparison,
    position_loop_finite_gv,
    position_loop_ideal,
    rfob_estimator_tf,
    sensitivity_tf,
)
from .observer_model import (
    DesignVerdict,
    ObserverConfig,
    PlantParams,
    alpha,
    check_bandwidth_constraint,
    default_params,
    load_param_file,
    second_order_params,
)
from .poly_tf import (
    FrequencyPoint,
    Polynomial,
    TransferFunction,
    frequency_sweep,
    poly_mul,
    poly_roots,
    tf_eval,
    tf_feedback,
)
from .stability import (
    RootLocusResult,
    RouthReport,
    StabilityMap,
    rhp_zero_scan,
    root_locus,
    routh_hurwitz,
    sensitivity_peak,
    stability_map,
    third_order_alpha_condition,
)
from .time_sim import (
    FrictionModel,
    ResponseMetrics,
    SimConfig,
    SinusoidReference,
    StepForceReference,
    Trajectory,
    compute_metrics,
    simulate_force,
    simulate_position,
)

__version__ = "0.1.0"
