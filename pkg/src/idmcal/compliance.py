"""Driver compliance to the model's internal safety thresholds.

A sample is compliant when the observed gap is at least the desired safety
gap implied by the calibrated parameters, the observed time gap is at least
the calibrated headway T, and the observed speed does not exceed the
calibrated desired speed. Compliance is evaluated on observed kinematics
only; simulation never enters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import ParameterSet, desired_gap
from .objectives import sstar_series
from .trajectory import CFEvent, DerivedSample
from .validation import check_series


@dataclass(frozen=True)
class ComplianceSeries:
    """Per-step compliance flags with the thresholds they were tested against."""

    sc: np.ndarray
    s_req: np.ndarray
    average: float


@dataclass(frozen=True)
class FiveNumberSummary:
    min: float
    q1: float
    median: float
    q3: float
    max: float

    def as_dict(self) -> dict[str, float]:
        return {"min": self.min, "q1": self.q1, "median": self.median,
                "q3": self.q3, "max": self.max}


def compliance_step(p: ParameterSet, d: DerivedSample) -> tuple[int, float]:
    """Binary compliance of one observed sample, with the required gap.

    All three conditions are weak inequalities; a negative required gap makes
    the gap condition trivially satisfied, and an infinite time gap (vehicle
    at standstill) satisfies the headway condition.
    """
    s_req = desired_gap(p, d.v, d.dv)
    ok = d.gap >= s_req and d.tg >= p.T and d.v <= p.v0
    return (1 if ok else 0), s_req


def compliance_series(p: ParameterSet, event: CFEvent) -> ComplianceSeries:
    """Compliance of every observed sample of an event, plus the average."""
    if event.n_samples == 0:
        raise ValueError("event is empty")
    s_req = sstar_series(p, event.v_foll, event.dv)
    sc = ((event.gap >= s_req) & (event.tg >= p.T)
          & (event.v_foll <= p.v0)).astype(int)
    return ComplianceSeries(sc=sc, s_req=s_req, average=float(sc.mean()))


def five_number_summary(values) -> FiveNumberSummary:
    """Min, quartiles and max with linear interpolation between order stats."""
    arr = check_series(values, "values")
    q = np.percentile(arr, [0, 25, 50, 75, 100])
    return FiveNumberSummary(*(float(x) for x in q))


def compliance_summary(values) -> FiveNumberSummary:
    """Five-number summary of per-event compliance averages."""
    return five_number_summary(values)
