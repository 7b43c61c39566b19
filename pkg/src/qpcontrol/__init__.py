"""Closed-loop quality control for video encoders via per-frame QP feedback."""

from .controller import (
    ControllerState,
    ControlObjective,
    FrameKind,
    PidGains,
    QpRange,
    clamp_round_qp,
    compute_error,
    controller_frame,
    pid_step,
    policy_qp,
    reset,
)
from .config import emit_config, parse_config
from .harness import (
    ComparisonReport,
    ExperimentConfig,
    FrameRecord,
    MetricsReport,
    RunMode,
    compare,
    compute_metrics,
    run_closed_loop,
    run_fixed_qp,
)
from .plant import (
    DisturbanceKind,
    DisturbanceSpec,
    FrameOutcome,
    PlantKind,
    PlantModel,
    TraceTable,
    disturbance_at,
    rate_model,
    step_plant,
)
from .sysid import ImpulseExperiment, OrderEstimate, estimate_order, run_impulse

__version__ = "0.1.0"

__all__ = [
    "ComparisonReport",
    "ControlObjective",
    "ControllerState",
    "DisturbanceKind",
    "DisturbanceSpec",
    "ExperimentConfig",
    "FrameKind",
    "FrameOutcome",
    "FrameRecord",
    "ImpulseExperiment",
    "MetricsReport",
    "OrderEstimate",
    "PidGains",
    "PlantKind",
    "PlantModel",
    "QpRange",
    "RunMode",
    "TraceTable",
    "clamp_round_qp",
    "compare",
    "compute_error",
    "compute_metrics",
    "controller_frame",
    "disturbance_at",
    "emit_config",
    "estimate_order",
    "parse_config",
    "pid_step",
    "policy_qp",
    "rate_model",
    "reset",
    "run_closed_loop",
    "run_fixed_qp",
    "run_impulse",
    "step_plant",
]
