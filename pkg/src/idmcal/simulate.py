"""Forward simulation of a follower behind a recorded leader.

Global fitting: the follower is seeded from the first observed sample only
and then advanced with the model against the recorded leader series, one
ballistic (constant-acceleration) step per data sample. The integration step
always equals the data step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .models import ModelKind, ParameterSet
from .trajectory import CFEvent


@dataclass(frozen=True)
class SimulatedTrajectory:
    """Simulated follower series, truncated at the first collision step."""

    t: np.ndarray
    v_sim: np.ndarray
    x_sim: np.ndarray
    gap_sim: np.ndarray
    dv_sim: np.ndarray
    sstar_sim: np.ndarray
    collided: bool
    collision_step: int | None

    @property
    def n_steps(self) -> int:
        return len(self.t)


def step_ballistic(v: float, accel: float, dt: float) -> tuple[float, float]:
    """Advance one constant-acceleration step without reversing.

    Returns ``(v_next, dx)``. If the speed would cross zero inside the step
    the vehicle stops at ``t* = v/|accel|`` and covers the stopping distance
    ``v^2 / (2*|accel|)``.
    """
    if v < 0:
        raise ValueError(f"speed must be >= 0, got {v}")
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    v_next = v + accel * dt
    if v_next >= 0.0:
        return v_next, v * dt + 0.5 * accel * dt * dt
    return 0.0, -0.5 * v * v / accel


@njit(cache=True)
def _simulate_core(is_plus, a, b, v0, delta, s0, s1, T, dt,
                   x_lead, v_lead, lead_length, x_start, v_start):
    """Hot loop shared by the simulator and the synthetic generator.

    Fills per-step series and returns the filled length; stops right after
    recording the first non-positive gap. The per-step update mirrors
    :func:`step_ballistic`.
    """
    n = x_lead.shape[0]
    vs = np.empty(n)
    xs = np.empty(n)
    gaps = np.empty(n)
    dvs = np.empty(n)
    sstars = np.empty(n)
    inv_2rab = 1.0 / (2.0 * math.sqrt(a * b))
    v = v_start
    x = x_start
    collided = False
    collision_step = -1
    filled = 0
    for k in range(n):
        gap = x_lead[k] - x - lead_length[k]
        dv = v - v_lead[k]
        sstar = s0 + T * v + v * dv * inv_2rab
        if s1 > 0.0:
            sstar += s1 * math.sqrt(v / v0)
        vs[k] = v
        xs[k] = x
        gaps[k] = gap
        dvs[k] = dv
        sstars[k] = sstar
        filled = k + 1
        if gap <= 0.0:
            collided = True
            collision_step = k
            break
        if k + 1 == n:
            break
        free = 1.0 - (v / v0) ** delta
        ratio = sstar / gap
        interaction = 1.0 - ratio * ratio
        if is_plus:
            accel = a * (free if free < interaction else interaction)
        else:
            accel = a * (free + interaction - 1.0)
        v_next = v + accel * dt
        if v_next >= 0.0:
            x += v * dt + 0.5 * accel * dt * dt
            v = v_next
        else:
            x += -0.5 * v * v / accel
            v = 0.0
    return filled, vs, xs, gaps, dvs, sstars, collided, collision_step


def _run_core(model: ModelKind, p: ParameterSet, dt: float,
              x_lead: np.ndarray, v_lead: np.ndarray,
              lead_length: np.ndarray, x_start: float, v_start: float):
    return _simulate_core(
        model is ModelKind.IDM_PLUS,
        float(p.a), float(p.b), float(p.v0), float(p.delta), float(p.s0),
        float(p.s1), float(p.T), float(dt),
        np.ascontiguousarray(x_lead, dtype=np.float64),
        np.ascontiguousarray(v_lead, dtype=np.float64),
        np.ascontiguousarray(lead_length, dtype=np.float64),
        float(x_start), float(v_start))


def simulate_follower(model: ModelKind, p: ParameterSet,
                      event: CFEvent) -> SimulatedTrajectory:
    """Simulate the follower of ``event`` under ``model`` with parameters ``p``.

    The follower starts from the event's first observed position and speed;
    the leader is replayed from the recorded samples. A non-positive
    simulated gap sets the collision flag and truncates the output (the
    objective layer maps that to a penalty).
    """
    if event.n_samples < 2:
        raise ValueError("event needs at least 2 samples")
    filled, vs, xs, gaps, dvs, sstars, collided, step = _run_core(
        model, p, event.dt, event.x_lead, event.v_lead, event.lead_length,
        float(event.x_foll[0]), float(event.v_foll[0]))
    return SimulatedTrajectory(
        t=event.t[:filled],
        v_sim=vs[:filled],
        x_sim=xs[:filled],
        gap_sim=gaps[:filled],
        dv_sim=dvs[:filled],
        sstar_sim=sstars[:filled],
        collided=bool(collided),
        collision_step=int(step) if collided else None,
    )
