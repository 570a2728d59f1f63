"""Calibration and safety-compliance evaluation for the Intelligent Driver Model.

Calibrates IDM and IDM+ against leader/follower trajectory data with
classical NRMSE objectives or a combined safety-spacing objective, and
evaluates how often observed driving satisfies the calibrated model's own
safety thresholds.
"""

from .calibrate import (BatchResult, CalibrationResult, IDMCalibrator,
                        ParameterSpace, SpaceMode, calibrate_batch,
                        calibrate_event)
from .compliance import (ComplianceSeries, FiveNumberSummary,
                         compliance_series, compliance_step,
                         compliance_summary, five_number_summary)
from .models import (CollisionError, KinematicState, ModelKind,
                     NoEquilibriumError, ParameterSet, desired_gap,
                     equilibrium_gap, idm_accel, idm_plus_accel, model_accel)
from .objectives import (ErrorReport, Mop, ObjectiveSpec,
                         UndefinedDenominatorError, error_report,
                         evaluate_objective, nrmse, sstar_series)
from .optimize import (Box, OptimizationResult, OptimizerConfig,
                       direct_search, local_refine, optimize)
from .simulate import SimulatedTrajectory, simulate_follower, step_ballistic
from .synth import (BenchmarkCase, GenerationError, LeaderScript, NoiseSpec,
                    benchmark_cases, benchmark_suite, generate_event,
                    generate_leader)
from .trajectory import (CFEvent, DerivedSample, Trajectory, TrajectoryError,
                         TrajectorySample, V_EPS, derive_kinematics,
                         extract_cf_events, parse_trajectory_csv,
                         read_event_csv, write_event_csv)

SCHEMA_VERSION = 1

__version__ = "0.1.0"

__all__ = [
    "BatchResult", "BenchmarkCase", "Box", "CFEvent", "CalibrationResult",
    "CollisionError", "ComplianceSeries", "DerivedSample", "ErrorReport",
    "FiveNumberSummary", "GenerationError", "IDMCalibrator", "KinematicState",
    "LeaderScript", "ModelKind", "Mop", "NoEquilibriumError", "NoiseSpec",
    "ObjectiveSpec", "OptimizationResult", "OptimizerConfig", "ParameterSet",
    "ParameterSpace", "SCHEMA_VERSION", "SimulatedTrajectory", "SpaceMode",
    "Trajectory", "TrajectoryError", "TrajectorySample",
    "UndefinedDenominatorError", "V_EPS", "benchmark_cases",
    "benchmark_suite", "calibrate_batch", "calibrate_event",
    "compliance_series", "compliance_step", "compliance_summary",
    "derive_kinematics", "desired_gap", "direct_search", "equilibrium_gap",
    "error_report", "evaluate_objective", "extract_cf_events",
    "five_number_summary", "generate_event", "generate_leader", "idm_accel",
    "idm_plus_accel", "local_refine", "model_accel", "nrmse", "optimize",
    "parse_trajectory_csv", "read_event_csv", "simulate_follower",
    "sstar_series", "step_ballistic", "write_event_csv",
]
