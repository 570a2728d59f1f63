"""Per-event and batch calibration of IDM-family models.

Wires simulation and objective evaluation into the optimizer, recomputes the
reported errors and compliance at the returned parameters, and aggregates
batches into five-number summaries. ``IDMCalibrator`` wraps the same
machinery behind a scikit-learn style estimator.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .compliance import FiveNumberSummary, compliance_series, five_number_summary
from .models import PARAM_NAMES, ModelKind, ParameterSet
from .objectives import (ErrorReport, Mop, ObjectiveSpec, error_report,
                         evaluate_objective)
from .optimize import Box, OptimizerConfig, optimize
from .simulate import SimulatedTrajectory, simulate_follower
from .trajectory import CFEvent
from .validation import check_event

# Calibration bounds per parameter; s1 is pinned to 0 in the standard modes.
PARAM_BOUNDS: dict[str, tuple[float, float]] = {
    "a": (0.1, 6.0),
    "b": (0.1, 6.0),
    "v0": (20.0, 40.0),
    "delta": (2.0, 4.0),
    "s0": (2.0, 5.0),
    "s1": (0.0, 0.0),
    "T": (0.5, 6.0),
}
DELTA_FIXED = 4.0
S0_FIXED = 2.0
S1_FIXED = 0.0

_IDX = {name: i for i, name in enumerate(PARAM_NAMES)}


class SpaceMode(Enum):
    SIMULATOR_6P = "simulator6"
    DRONE_4P = "drone4"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ParameterSpace:
    """Search box over (a, b, v0, delta, s0, s1, T) with per-mode fixing."""

    box: Box
    mode: SpaceMode

    @classmethod
    def simulator_6p(cls) -> "ParameterSpace":
        """Six free parameters; only s1 fixed at 0."""
        bounds = [PARAM_BOUNDS[name] for name in PARAM_NAMES]
        return cls(Box.of(bounds, fixed={_IDX["s1"]: S1_FIXED}),
                   SpaceMode.SIMULATOR_6P)

    @classmethod
    def drone_4p(cls) -> "ParameterSpace":
        """Free (a, b, v0, T); delta, s0, s1 fixed."""
        bounds = [PARAM_BOUNDS[name] for name in PARAM_NAMES]
        fixed = {_IDX["delta"]: DELTA_FIXED, _IDX["s0"]: S0_FIXED,
                 _IDX["s1"]: S1_FIXED}
        return cls(Box.of(bounds, fixed=fixed), SpaceMode.DRONE_4P)

    @classmethod
    def custom(cls, bounds: Mapping[str, tuple[float, float]],
               fixed: Mapping[str, float] | None = None) -> "ParameterSpace":
        """User-specified bounds/fixing; unlisted parameters keep defaults."""
        full = [PARAM_BOUNDS[name] for name in PARAM_NAMES]
        fixed_idx = {_IDX["delta"]: DELTA_FIXED, _IDX["s0"]: S0_FIXED,
                     _IDX["s1"]: S1_FIXED}
        for name, pair in bounds.items():
            if name not in _IDX:
                raise ValueError(f"unknown parameter {name!r}")
            full[_IDX[name]] = (float(pair[0]), float(pair[1]))
            fixed_idx.pop(_IDX[name], None)
        for name, value in (fixed or {}).items():
            if name not in _IDX:
                raise ValueError(f"unknown parameter {name!r}")
            fixed_idx[_IDX[name]] = float(value)
        box = Box.of(full, fixed=fixed_idx)
        # both box corners must be valid parameter sets
        ParameterSet(*(float(v) for v in box.lower))
        ParameterSet(*(float(v) for v in box.upper))
        return cls(box, SpaceMode.CUSTOM)

    @classmethod
    def from_name(cls, name: str) -> "ParameterSpace":
        key = name.strip().lower()
        if key == SpaceMode.SIMULATOR_6P.value:
            return cls.simulator_6p()
        if key == SpaceMode.DRONE_4P.value:
            return cls.drone_4p()
        raise ValueError(f"unknown parameter space {name!r}; expected "
                         f"'simulator6' or 'drone4' (or build a custom one)")

    @property
    def free_names(self) -> list[str]:
        return [PARAM_NAMES[i] for i in self.box.free_indices]


@dataclass(frozen=True)
class CalibrationResult:
    event_id: str
    model: ModelKind
    objective: ObjectiveSpec
    params: ParameterSet
    objective_value: float
    errors: ErrorReport
    compliance: float
    diagnostics: dict

    def as_dict(self) -> dict:
        record = {
            "event_id": self.event_id,
            "model": self.model.value,
            "objective": self.objective.as_dict(),
            "params": self.params.as_dict(),
            "objective_value": self.objective_value,
            "compliance": self.compliance,
        }
        record.update(self.errors.as_dict())
        record.update(self.diagnostics)
        return record


@dataclass(frozen=True)
class BatchResult:
    results: list[CalibrationResult]
    failures: list[tuple[str, str]]
    summaries: dict[str, FiveNumberSummary]


def calibrate_event(event: CFEvent, model: ModelKind, space: ParameterSpace,
                    spec: ObjectiveSpec,
                    cfg: OptimizerConfig | None = None) -> CalibrationResult:
    """Calibrate one model to one event.

    The optimizer minimizes the objective of a fresh global-fitting
    simulation per candidate; errors and compliance in the result are
    recomputed from the returned best parameters, not optimizer caches.
    """
    cfg = cfg or OptimizerConfig()

    def objective(x: np.ndarray) -> float:
        p = ParameterSet(*(float(v) for v in x))
        sim = simulate_follower(model, p, event)
        return evaluate_objective(spec, p, event, sim)

    res = optimize(objective, space.box, cfg)
    p_best = ParameterSet(*(float(v) for v in res.best_point))
    sim = simulate_follower(model, p_best, event)
    return CalibrationResult(
        event_id=event.event_id,
        model=model,
        objective=spec,
        params=p_best,
        objective_value=res.best_value,
        errors=error_report(p_best, event, sim),
        compliance=compliance_series(p_best, event).average,
        diagnostics={"evaluations": res.evaluations,
                     "refinement_improved": res.refinement_improved},
    )


def _calibrate_one(args):
    event, model, space, spec, cfg = args
    try:
        return calibrate_event(event, model, space, spec, cfg)
    except Exception as exc:  # per-event failures must not kill the batch
        return (event.event_id, f"{type(exc).__name__}: {exc}")


def _summarize(results: Sequence[CalibrationResult],
               space: ParameterSpace) -> dict[str, FiveNumberSummary]:
    summaries: dict[str, FiveNumberSummary] = {}

    def add(key, values):
        values = [v for v in values if v is not None]
        if values:
            summaries[key] = five_number_summary(values)

    add("nrmse_spacing", [r.errors.nrmse_spacing for r in results])
    add("nrmse_speed", [r.errors.nrmse_speed for r in results])
    add("nrmse_timegap", [r.errors.nrmse_timegap for r in results])
    add("compliance", [r.compliance for r in results])
    for name in space.free_names:
        add(name, [getattr(r.params, name) for r in results])
    return summaries


def calibrate_batch(events: Sequence[CFEvent], model: ModelKind,
                    space: ParameterSpace, spec: ObjectiveSpec,
                    cfg: OptimizerConfig | None = None,
                    jobs: int = 1) -> BatchResult:
    """Calibrate many events independently.

    Results come back in input order regardless of ``jobs``; each event's
    calibration is deterministic, so the output is identical at any worker
    count. Per-event failures are collected, not raised.
    """
    if not events:
        raise ValueError("no events to calibrate")
    cfg = cfg or OptimizerConfig()
    tasks = [(event, model, space, spec, cfg) for event in events]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_calibrate_one, tasks))
    else:
        outcomes = [_calibrate_one(task) for task in tasks]

    results = [o for o in outcomes if isinstance(o, CalibrationResult)]
    failures = [o for o in outcomes if not isinstance(o, CalibrationResult)]
    return BatchResult(results=results, failures=failures,
                       summaries=_summarize(results, space))


class IDMCalibrator(BaseEstimator):
    """Scikit-learn style calibrator: fit to a CFEvent, predict its trajectory.

    Parameters mirror the functional API: ``model`` is ``"idm"``/``"idm+"``
    or a ModelKind, ``space`` is ``"drone4"``/``"simulator6"`` or a
    ParameterSpace, ``objective`` is one of ``"spacing"``, ``"speed"``,
    ``"timegap"``, ``"combined"`` or an ObjectiveSpec (which then wins over
    the weight arguments).

    After ``fit``, the calibrated :class:`ParameterSet` is in ``params_`` and
    the full :class:`CalibrationResult` in ``result_``.
    """

    def __init__(self, model="idm", space="drone4", objective="spacing",
                 alpha: float = 1.0, beta: float = 1.0,
                 collision_penalty: float = 1e3,
                 optimizer: OptimizerConfig | None = None):
        self.model = model
        self.space = space
        self.objective = objective
        self.alpha = alpha
        self.beta = beta
        self.collision_penalty = collision_penalty
        self.optimizer = optimizer

    def _resolved(self):
        model = (self.model if isinstance(self.model, ModelKind)
                 else ModelKind.parse(self.model))
        space = (self.space if isinstance(self.space, ParameterSpace)
                 else ParameterSpace.from_name(self.space))
        if isinstance(self.objective, ObjectiveSpec):
            spec = self.objective
        else:
            spec = ObjectiveSpec(mop=Mop.parse(self.objective),
                                 alpha=self.alpha, beta=self.beta,
                                 collision_penalty=self.collision_penalty)
        return model, space, spec

    def fit(self, X, y=None) -> "IDMCalibrator":
        event = check_event(X)
        model, space, spec = self._resolved()
        self.result_ = calibrate_event(event, model, space, spec,
                                       self.optimizer)
        self.params_ = self.result_.params
        self.model_ = model
        self.objective_spec_ = spec
        self.event_ = event
        return self

    def predict(self, X=None) -> SimulatedTrajectory:
        """Simulate an event (the fitted one by default) at the fitted params."""
        check_is_fitted(self, "params_")
        event = self.event_ if X is None else check_event(X)
        return simulate_follower(self.model_, self.params_, event)

    def score(self, X=None, y=None) -> float:
        """Negated objective value (higher is better, sklearn convention)."""
        check_is_fitted(self, "params_")
        event = self.event_ if X is None else check_event(X)
        sim = simulate_follower(self.model_, self.params_, event)
        return -evaluate_objective(self.objective_spec_, self.params_,
                                   event, sim)
