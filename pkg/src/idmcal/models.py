"""Intelligent Driver Model (IDM) and IDM+ acceleration equations.

All functions here are pure and operate on scalar states; vectorized helpers
for whole series live in :mod:`idmcal.objectives`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

PARAM_NAMES = ("a", "b", "v0", "delta", "s0", "s1", "T")


class CollisionError(ValueError):
    """Acceleration requested for a non-positive gap (vehicles overlap)."""


class NoEquilibriumError(ValueError):
    """No steady-state gap exists at the requested speed."""


class ModelKind(Enum):
    """Which acceleration law to use."""

    IDM = "idm"
    IDM_PLUS = "idm+"

    @classmethod
    def parse(cls, name: str) -> "ModelKind":
        key = name.strip().lower()
        for kind in cls:
            if kind.value == key:
                return kind
        raise ValueError(f"unknown model kind {name!r}; expected one of "
                         f"{[k.value for k in cls]}")


@dataclass(frozen=True)
class ParameterSet:
    """The seven IDM parameters.

    Attributes
    ----------
    a : float
        Maximum acceleration, m/s^2.
    b : float
        Desired (comfortable) deceleration, m/s^2.
    v0 : float
        Desired speed, m/s.
    delta : float
        Acceleration exponent, dimensionless.
    s0 : float
        Jam distance, m.
    s1 : float
        Second jam distance (speed-dependent term), m.
    T : float
        Safe time headway, s.
    """

    a: float
    b: float
    v0: float
    delta: float
    s0: float
    s1: float
    T: float

    def __post_init__(self) -> None:
        if not self.a > 0:
            raise ValueError(f"a must be > 0, got {self.a}")
        if not self.b > 0:
            raise ValueError(f"b must be > 0, got {self.b}")
        if not self.v0 > 0:
            raise ValueError(f"v0 must be > 0, got {self.v0}")
        if not self.delta >= 1:
            raise ValueError(f"delta must be >= 1, got {self.delta}")
        if self.s0 < 0:
            raise ValueError(f"s0 must be >= 0, got {self.s0}")
        if self.s1 < 0:
            raise ValueError(f"s1 must be >= 0, got {self.s1}")
        if not self.T > 0:
            raise ValueError(f"T must be > 0, got {self.T}")

    def to_tuple(self) -> tuple[float, ...]:
        return (self.a, self.b, self.v0, self.delta, self.s0, self.s1, self.T)

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in PARAM_NAMES}

    @classmethod
    def from_dict(cls, values: dict) -> "ParameterSet":
        return cls(**{name: float(values[name]) for name in PARAM_NAMES})


class KinematicState(NamedTuple):
    """Follower state relative to its leader.

    v: follower speed, m/s (>= 0).
    dv: approaching rate = follower speed - leader speed, m/s
        (positive when closing in).
    s: net distance gap, m. Non-positive values signal a collision and are
       rejected by the acceleration functions.
    """

    v: float
    dv: float
    s: float


def desired_gap(p: ParameterSet, v: float, dv: float) -> float:
    """Desired dynamic distance gap, m.

    Combines the jam distances, the headway term ``T*v`` and the
    closing-speed term ``v*dv / (2*sqrt(a*b))``. The raw value is returned
    without clamping: it can drop below ``s0`` or become negative when the
    follower is opening the gap fast (``dv`` strongly negative). Callers that
    need a safety threshold use the raw value on purpose.
    """
    if v < 0:
        raise ValueError(f"speed must be >= 0, got {v}")
    gap = p.s0 + p.T * v + v * dv / (2.0 * math.sqrt(p.a * p.b))
    if p.s1:
        gap += p.s1 * math.sqrt(v / p.v0)
    return gap


def idm_accel(p: ParameterSet, state: KinematicState) -> float:
    """IDM acceleration, m/s^2: ``a * (1 - (v/v0)^delta - (s*/s)^2)``."""
    if state.s <= 0:
        raise CollisionError(f"non-positive gap {state.s}")
    sstar = desired_gap(p, state.v, state.dv)
    return p.a * (1.0 - (state.v / p.v0) ** p.delta - (sstar / state.s) ** 2)


def idm_plus_accel(p: ParameterSet, state: KinematicState) -> float:
    """IDM+ acceleration, m/s^2: ``a * min(1 - (v/v0)^delta, 1 - (s*/s)^2)``.

    Takes the minimum of the free-flow and interaction components instead of
    their sum, which raises the road capacity the model reproduces.
    """
    if state.s <= 0:
        raise CollisionError(f"non-positive gap {state.s}")
    sstar = desired_gap(p, state.v, state.dv)
    free = 1.0 - (state.v / p.v0) ** p.delta
    interaction = 1.0 - (sstar / state.s) ** 2
    return p.a * min(free, interaction)


def model_accel(kind: ModelKind, p: ParameterSet, state: KinematicState) -> float:
    """Dispatch to the acceleration law selected by ``kind``."""
    if kind is ModelKind.IDM:
        return idm_accel(p, state)
    return idm_plus_accel(p, state)


def equilibrium_gap(p: ParameterSet, v: float) -> float:
    """Gap at which the IDM acceleration is zero for dv = 0 at speed ``v``.

    Closed form ``s*(v, 0) / sqrt(1 - (v/v0)^delta)``, defined for
    0 <= v < v0 only.
    """
    if v < 0:
        raise ValueError(f"speed must be >= 0, got {v}")
    if v >= p.v0:
        raise NoEquilibriumError(
            f"no equilibrium gap at v={v} >= v0={p.v0}")
    return desired_gap(p, v, 0.0) / math.sqrt(1.0 - (v / p.v0) ** p.delta)
