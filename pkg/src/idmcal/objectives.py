"""Calibration objectives: NRMSE family plus the safety-spacing objective.

The combined objective weights the error in observed spacing against the
error between the desired safety gaps implied by observed and simulated
kinematics under the same candidate parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .models import ParameterSet
from .simulate import SimulatedTrajectory
from .trajectory import CFEvent, V_EPS
from .validation import check_same_length, check_series

COLLISION_PENALTY_DEFAULT = 1e3


class UndefinedDenominatorError(ValueError):
    """NRMSE denominator is zero (all-zero observed series)."""


class Mop(Enum):
    """Measure of performance an objective compares."""

    SPACING = "spacing"
    SPEED = "speed"
    TIMEGAP = "timegap"
    COMBINED_SAFETY = "combined"

    @classmethod
    def parse(cls, name: str) -> "Mop":
        key = name.strip().lower()
        for mop in cls:
            if mop.value == key:
                return mop
        raise ValueError(f"unknown objective {name!r}; expected one of "
                         f"{[m.value for m in cls]}")


@dataclass(frozen=True)
class ObjectiveSpec:
    """Objective choice plus weights and the collision-penalty policy.

    ``alpha`` weighs the observed-spacing error, ``beta`` the safety-spacing
    error; both only matter for the combined objective. The weights are used
    as given (no normalization).
    """

    mop: Mop = Mop.SPACING
    alpha: float = 1.0
    beta: float = 1.0
    collision_penalty: float = COLLISION_PENALTY_DEFAULT

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("weights must be >= 0")
        if self.mop is Mop.COMBINED_SAFETY and self.alpha + self.beta <= 0:
            raise ValueError("combined objective needs alpha + beta > 0")
        if not self.collision_penalty > 0:
            raise ValueError("collision_penalty must be > 0")

    def as_dict(self) -> dict:
        return {"mop": self.mop.value, "alpha": self.alpha, "beta": self.beta,
                "collision_penalty": self.collision_penalty}


@dataclass(frozen=True)
class ErrorReport:
    """NRMSE per measure of performance; None where undefined."""

    nrmse_spacing: float | None
    nrmse_speed: float | None
    nrmse_timegap: float | None
    nrmse_sstar: float | None
    collided: bool

    def as_dict(self) -> dict:
        return {"nrmse_spacing": self.nrmse_spacing,
                "nrmse_speed": self.nrmse_speed,
                "nrmse_timegap": self.nrmse_timegap,
                "nrmse_sstar": self.nrmse_sstar,
                "collided": self.collided}


def nrmse(obs, sim) -> float:
    """Root-mean-square error normalized by the RMS of the observed series."""
    obs = check_series(obs, "obs")
    sim = check_series(sim, "sim")
    check_same_length(("obs", "sim"), obs, sim)
    denom_sq = float(np.mean(obs * obs))
    if denom_sq == 0.0:
        raise UndefinedDenominatorError(
            "observed series is all zero; NRMSE undefined")
    err = obs - sim
    return float(np.sqrt(np.mean(err * err) / denom_sq))


def sstar_series(p: ParameterSet, v, dv) -> np.ndarray:
    """Elementwise desired safety gap for a (speed, approaching-rate) series.

    With observed kinematics this is the required safety spacing; with
    simulated kinematics, the simulated one. Depends on v and dv only.
    """
    v = np.asarray(v, dtype=float)
    dv = np.asarray(dv, dtype=float)
    check_same_length(("v", "dv"), v, dv)
    out = p.s0 + p.T * v + v * dv / (2.0 * np.sqrt(p.a * p.b))
    if p.s1:
        out = out + p.s1 * np.sqrt(v / p.v0)
    return out


def _timegap_pair(event: CFEvent, sim: SimulatedTrajectory, v_eps: float):
    n = sim.n_steps
    v_obs = event.v_foll[:n]
    v_sim = sim.v_sim
    mask = (v_obs >= v_eps) & (v_sim >= v_eps)
    if not mask.any():
        return None
    tg_obs = event.gap[:n][mask] / v_obs[mask]
    tg_sim = sim.gap_sim[mask] / v_sim[mask]
    return tg_obs, tg_sim


def evaluate_objective(spec: ObjectiveSpec, p: ParameterSet, event: CFEvent,
                       sim: SimulatedTrajectory, v_eps: float = V_EPS) -> float:
    """Score one simulation against its event; lower is better.

    A collided simulation scores ``spec.collision_penalty`` regardless of the
    measure of performance.
    """
    if sim.collided:
        return float(spec.collision_penalty)
    if spec.mop is Mop.SPACING:
        return nrmse(event.gap, sim.gap_sim)
    if spec.mop is Mop.SPEED:
        return nrmse(event.v_foll, sim.v_sim)
    if spec.mop is Mop.TIMEGAP:
        pair = _timegap_pair(event, sim, v_eps)
        if pair is None:
            raise UndefinedDenominatorError(
                "no steps with both speeds above the standstill threshold")
        return nrmse(pair[0], pair[1])
    # combined: observed-spacing error plus safety-spacing error
    sstar_req = sstar_series(p, event.v_foll, event.dv)
    return (spec.alpha * nrmse(event.gap, sim.gap_sim)
            + spec.beta * nrmse(sstar_req, sim.sstar_sim))


def error_report(p: ParameterSet, event: CFEvent, sim: SimulatedTrajectory,
                 v_eps: float = V_EPS) -> ErrorReport:
    """All four NRMSE values in one pass.

    For collided simulations the errors cover the pre-collision prefix. The
    time-gap error only covers steps where both the observed and simulated
    speeds are at least ``v_eps``; it is None when no such step exists.
    """
    n = sim.n_steps

    def _safe(obs, sim_vals):
        try:
            return nrmse(obs, sim_vals)
        except UndefinedDenominatorError:
            return None

    tg_pair = _timegap_pair(event, sim, v_eps)
    sstar_req = sstar_series(p, event.v_foll[:n], event.dv[:n])
    return ErrorReport(
        nrmse_spacing=_safe(event.gap[:n], sim.gap_sim),
        nrmse_speed=_safe(event.v_foll[:n], sim.v_sim),
        nrmse_timegap=None if tg_pair is None else _safe(*tg_pair),
        nrmse_sstar=_safe(sstar_req, sim.sstar_sim),
        collided=sim.collided,
    )
