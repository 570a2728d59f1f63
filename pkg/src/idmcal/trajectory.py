"""Trajectory data model, CSV ingestion and car-following event extraction.

Input files are UTF-8 comma-separated CSV with a header row and '.' decimal
separator. Canonical column names:

    time_s, lead_pos_m, lead_speed_mps, foll_pos_m, foll_speed_mps,
    lead_length_m, gap_m

Either ``gap_m`` or the (``lead_pos_m``, ``foll_pos_m``) pair must be present;
``lead_length_m`` is optional and defaults to 0. A user-supplied schema can
map canonical names onto differently named columns. Row numbers in error
messages count data rows (header excluded, first data row is row 1).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

import numpy as np

# Speed below which the time gap is treated as +inf (division guard at
# standstill). An infinite time gap falls outside any finite selection band,
# so standstill samples terminate events.
V_EPS = 0.1

CANONICAL_COLUMNS = (
    "time_s",
    "lead_pos_m",
    "lead_speed_mps",
    "foll_pos_m",
    "foll_speed_mps",
    "lead_length_m",
    "gap_m",
)

# Extraction defaults: time-gap band and minimum event duration.
TG_MIN_DEFAULT = 0.25
TG_MAX_DEFAULT = 3.0
MIN_DURATION_DEFAULT = 20.0


class TrajectoryError(ValueError):
    """Malformed trajectory input. ``row`` is the 1-based data row at fault."""

    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"{message} (row {row})"
        super().__init__(message)
        self.row = row


class TrajectorySample(NamedTuple):
    t: float
    x_lead: float
    v_lead: float
    x_foll: float
    v_foll: float
    lead_length: float


class DerivedSample(NamedTuple):
    """Per-step observed kinematics of the follower.

    gap is the net (bumper-to-bumper) distance, m; dv the approaching rate
    (follower minus leader speed), m/s; tg the time gap gap/v, s (+inf below
    V_EPS).
    """

    t: float
    v: float
    dv: float
    gap: float
    tg: float


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled leader/follower kinematics for one follower."""

    t: np.ndarray
    x_lead: np.ndarray
    v_lead: np.ndarray
    x_foll: np.ndarray
    v_foll: np.ndarray
    lead_length: np.ndarray
    gap: np.ndarray
    dt: float

    def __post_init__(self) -> None:
        n = len(self.t)
        for name in ("x_lead", "v_lead", "x_foll", "v_foll",
                     "lead_length", "gap"):
            if len(getattr(self, name)) != n:
                raise TrajectoryError(f"column {name} has {len(getattr(self, name))} "
                                      f"rows, expected {n}")
        if n < 2:
            raise TrajectoryError("trajectory needs at least 2 samples")
        diffs = np.diff(self.t)
        bad = np.nonzero(diffs <= 0)[0]
        if bad.size:
            raise TrajectoryError("time not strictly increasing", row=int(bad[0]) + 2)
        if not self.dt > 0:
            raise TrajectoryError(f"dt must be > 0, got {self.dt}")
        off = np.nonzero(np.abs(diffs - self.dt) >= 0.1 * self.dt)[0]
        if off.size:
            raise TrajectoryError(
                f"non-uniform sampling: step {diffs[off[0]]:.6g} s vs "
                f"nominal dt {self.dt:.6g} s", row=int(off[0]) + 2)
        for name in ("v_lead", "v_foll", "lead_length"):
            neg = np.nonzero(np.asarray(getattr(self, name)) < 0)[0]
            if neg.size:
                raise TrajectoryError(f"{name} must be >= 0", row=int(neg[0]) + 1)

    @classmethod
    def from_arrays(cls, t, v_lead, v_foll, x_lead=None, x_foll=None,
                    lead_length=None, gap=None, dt=None) -> "Trajectory":
        """Build a trajectory, synthesizing whatever is derivable.

        With positions given, ``gap = x_lead - x_foll - lead_length``. With
        only ``gap`` given, the follower position is synthesized as the
        0-anchored cumulative (trapezoidal) integral of its speed and the gap
        column stays authoritative for all downstream kinematics.
        """
        t = np.asarray(t, dtype=float)
        v_lead = np.asarray(v_lead, dtype=float)
        v_foll = np.asarray(v_foll, dtype=float)
        n = len(t)
        if n < 2:
            raise TrajectoryError("trajectory needs at least 2 samples")
        if lead_length is None:
            lead_length = np.zeros(n)
        else:
            lead_length = np.broadcast_to(
                np.asarray(lead_length, dtype=float), (n,)).copy()
        if x_lead is None or x_foll is None:
            if gap is None:
                raise TrajectoryError(
                    "need either both positions or a gap column")
            gap = np.asarray(gap, dtype=float)
            x_foll = np.concatenate(
                ([0.0], np.cumsum(0.5 * (v_foll[1:] + v_foll[:-1]) * np.diff(t))))
            x_lead = x_foll + gap + lead_length
        else:
            x_lead = np.asarray(x_lead, dtype=float)
            x_foll = np.asarray(x_foll, dtype=float)
            if gap is None:
                gap = x_lead - x_foll - lead_length
            else:
                gap = np.asarray(gap, dtype=float)
        if dt is None:
            dt = float(np.median(np.diff(t)))
        return cls(t=t, x_lead=x_lead, v_lead=v_lead, x_foll=x_foll,
                   v_foll=v_foll, lead_length=lead_length, gap=gap, dt=float(dt))

    @property
    def n_samples(self) -> int:
        return len(self.t)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def sample(self, i: int) -> TrajectorySample:
        return TrajectorySample(
            float(self.t[i]), float(self.x_lead[i]), float(self.v_lead[i]),
            float(self.x_foll[i]), float(self.v_foll[i]),
            float(self.lead_length[i]))


def _resolve_schema(schema: Mapping[str, str] | None) -> dict[str, str]:
    mapping = {name: name for name in CANONICAL_COLUMNS}
    if schema:
        unknown = set(schema) - set(CANONICAL_COLUMNS)
        if unknown:
            raise TrajectoryError(
                f"unknown canonical column(s) in schema: {sorted(unknown)}")
        mapping.update(schema)
    return mapping


def parse_trajectory_csv(path, schema: Mapping[str, str] | None = None) -> Trajectory:
    """Read one trajectory from a CSV file.

    ``schema`` maps canonical column names to the file's column names.
    Raises :class:`TrajectoryError` naming the offending data row for
    non-numeric cells and non-monotonic time.
    """
    mapping = _resolve_schema(schema)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TrajectoryError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        index: dict[str, int] = {}
        for canonical, actual in mapping.items():
            if actual in header:
                index[canonical] = header.index(actual)
        required = ["time_s", "lead_speed_mps", "foll_speed_mps"]
        missing = [mapping[c] for c in required if c not in index]
        has_positions = "lead_pos_m" in index and "foll_pos_m" in index
        if "gap_m" not in index and not has_positions:
            missing.append(f"{mapping['gap_m']} or "
                           f"({mapping['lead_pos_m']}, {mapping['foll_pos_m']})")
        if missing:
            raise TrajectoryError(
                f"{path}: missing required column(s): {', '.join(missing)}")

        columns: dict[str, list[float]] = {name: [] for name in index}
        width = max(index.values()) + 1
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < width:
                raise TrajectoryError(
                    f"{path}: expected at least {width} columns, got {len(row)}",
                    row=row_no)
            for name, col in index.items():
                cell = row[col].strip()
                try:
                    value = float(cell)
                except ValueError:
                    raise TrajectoryError(
                        f"{path}: non-numeric value {cell!r} in column "
                        f"{mapping[name]}", row=row_no) from None
                if math.isnan(value):
                    raise TrajectoryError(
                        f"{path}: NaN in column {mapping[name]}", row=row_no)
                columns[name].append(value)

    if not columns["time_s"]:
        raise TrajectoryError(f"{path}: no data rows")
    t = np.array(columns["time_s"])
    bad = np.nonzero(np.diff(t) <= 0)[0]
    if bad.size:
        raise TrajectoryError(f"{path}: time not strictly increasing",
                              row=int(bad[0]) + 2)
    return Trajectory.from_arrays(
        t=t,
        v_lead=columns["lead_speed_mps"],
        v_foll=columns["foll_speed_mps"],
        x_lead=columns.get("lead_pos_m"),
        x_foll=columns.get("foll_pos_m"),
        lead_length=columns.get("lead_length_m"),
        gap=columns.get("gap_m"),
    )


def _derived_columns(traj: Trajectory, v_eps: float):
    v = traj.v_foll
    dv = traj.v_foll - traj.v_lead
    gap = traj.gap
    tg = np.where(v >= v_eps, gap / np.where(v >= v_eps, v, 1.0), np.inf)
    return v, dv, gap, tg


def derive_kinematics(traj: Trajectory, v_eps: float = V_EPS) -> list[DerivedSample]:
    """Per-sample gap, approaching rate and time gap from raw kinematics."""
    v, dv, gap, tg = _derived_columns(traj, v_eps)
    return [DerivedSample(float(traj.t[i]), float(v[i]), float(dv[i]),
                          float(gap[i]), float(tg[i]))
            for i in range(traj.n_samples)]


@dataclass(frozen=True)
class CFEvent:
    """A contiguous car-following segment, ready for calibration.

    Carries both the derived observed kinematics (gap, dv, tg) and the raw
    leader/follower series needed to re-simulate the follower.
    """

    event_id: str
    t: np.ndarray
    v_foll: np.ndarray
    dv: np.ndarray
    gap: np.ndarray
    tg: np.ndarray
    x_lead: np.ndarray
    v_lead: np.ndarray
    x_foll: np.ndarray
    lead_length: np.ndarray
    dt: float
    source: str = "drone"
    metadata: dict = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return len(self.t)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    @property
    def derived(self) -> list[DerivedSample]:
        return [DerivedSample(float(self.t[i]), float(self.v_foll[i]),
                              float(self.dv[i]), float(self.gap[i]),
                              float(self.tg[i]))
                for i in range(self.n_samples)]

    @classmethod
    def from_trajectory(cls, traj: Trajectory, event_id: str,
                        source: str = "drone", v_eps: float = V_EPS,
                        metadata: dict | None = None) -> "CFEvent":
        """Wrap a whole trajectory as a single event (no band filtering)."""
        v, dv, gap, tg = _derived_columns(traj, v_eps)
        return cls(event_id=event_id, t=traj.t, v_foll=v, dv=dv, gap=gap,
                   tg=tg, x_lead=traj.x_lead, v_lead=traj.v_lead,
                   x_foll=traj.x_foll, lead_length=traj.lead_length,
                   dt=traj.dt, source=source, metadata=metadata or {})

    def to_trajectory(self) -> Trajectory:
        return Trajectory(t=self.t, x_lead=self.x_lead, v_lead=self.v_lead,
                          x_foll=self.x_foll, v_foll=self.v_foll,
                          lead_length=self.lead_length, gap=self.gap,
                          dt=self.dt)


def extract_cf_events(traj: Trajectory,
                      tg_min: float = TG_MIN_DEFAULT,
                      tg_max: float = TG_MAX_DEFAULT,
                      min_duration: float = MIN_DURATION_DEFAULT,
                      *,
                      v_eps: float = V_EPS,
                      source: str = "drone",
                      id_prefix: str = "ev") -> list[CFEvent]:
    """Split a trajectory into car-following events.

    Returns the maximal contiguous segments whose time gap lies in
    [tg_min, tg_max] at every sample and whose duration is at least
    ``min_duration`` seconds. Segments are never bridged across out-of-band
    samples.
    """
    if not tg_min < tg_max:
        raise ValueError(f"tg_min must be < tg_max, got {tg_min} >= {tg_max}")
    if not min_duration > 0:
        raise ValueError(f"min_duration must be > 0, got {min_duration}")
    v, dv, gap, tg = _derived_columns(traj, v_eps)
    in_band = (tg >= tg_min) & (tg <= tg_max)

    events: list[CFEvent] = []
    n = traj.n_samples
    i = 0
    while i < n:
        if not in_band[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and in_band[j + 1]:
            j += 1
        if traj.t[j] - traj.t[i] >= min_duration:
            sl = slice(i, j + 1)
            events.append(CFEvent(
                event_id=f"{id_prefix}-{len(events):03d}",
                t=traj.t[sl], v_foll=v[sl], dv=dv[sl], gap=gap[sl], tg=tg[sl],
                x_lead=traj.x_lead[sl], v_lead=traj.v_lead[sl],
                x_foll=traj.x_foll[sl], lead_length=traj.lead_length[sl],
                dt=traj.dt, source=source))
        i = j + 1
    return events


def write_event_csv(event: CFEvent, path) -> None:
    """Write an event in the canonical trajectory schema (lossless floats)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CANONICAL_COLUMNS)
        for i in range(event.n_samples):
            writer.writerow([
                repr(float(event.t[i])),
                repr(float(event.x_lead[i])),
                repr(float(event.v_lead[i])),
                repr(float(event.x_foll[i])),
                repr(float(event.v_foll[i])),
                repr(float(event.lead_length[i])),
                repr(float(event.gap[i])),
            ])


def read_event_csv(path, event_id: str | None = None,
                   source: str = "file") -> CFEvent:
    """Read back one event file written by :func:`write_event_csv`."""
    traj = parse_trajectory_csv(path)
    if event_id is None:
        import os

        event_id = os.path.splitext(os.path.basename(str(path)))[0]
    return CFEvent.from_trajectory(traj, event_id=event_id, source=source)
