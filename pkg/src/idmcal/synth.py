"""Synthetic trajectory generation for verification and benchmarking.

Forward-simulates ground-truth model drivers behind scripted leaders, with
optional additive measurement noise, and emits regular CFEvents carrying the
true parameters in their metadata. The benchmark suite mixes steady
following, braking pulses, stop-and-go oscillation and free-driving preludes
so that acceleration, braking and headway behavior are all excited.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import ModelKind, ParameterSet, equilibrium_gap
from .simulate import _run_core
from .trajectory import CFEvent, Trajectory


class GenerationError(RuntimeError):
    """The scripted scenario produced a collision; use a gentler script."""


@dataclass(frozen=True)
class LeaderScript:
    """Piecewise-constant-acceleration leader profile.

    ``segments`` is a sequence of (duration s, acceleration m/s^2). The speed
    implied by the script must stay non-negative throughout.
    """

    segments: tuple[tuple[float, float], ...]
    initial_speed: float
    initial_position: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments",
                           tuple((float(d), float(a)) for d, a in self.segments))
        if not self.segments:
            raise ValueError("script needs at least one segment")
        v = self.initial_speed
        if v < 0:
            raise ValueError(f"initial speed must be >= 0, got {v}")
        for k, (duration, accel) in enumerate(self.segments):
            if not duration > 0:
                raise ValueError(f"segment {k} duration must be > 0")
            v += accel * duration
            if v < -1e-12:
                raise ValueError(
                    f"script implies negative speed ({v:.3f} m/s) after "
                    f"segment {k}")

    @property
    def total_duration(self) -> float:
        return sum(d for d, _ in self.segments)

    def to_dict(self) -> dict:
        return {"segments": [[d, a] for d, a in self.segments],
                "initial_speed": self.initial_speed,
                "initial_position": self.initial_position}

    @classmethod
    def from_dict(cls, data: dict) -> "LeaderScript":
        return cls(segments=tuple((d, a) for d, a in data["segments"]),
                   initial_speed=data["initial_speed"],
                   initial_position=data.get("initial_position", 0.0))


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian measurement noise, applied after simulation."""

    position_std: float = 0.0
    speed_std: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.position_std < 0 or self.speed_std < 0:
            raise ValueError("noise stds must be >= 0")

    def to_dict(self) -> dict:
        return {"position_std": self.position_std,
                "speed_std": self.speed_std, "seed": self.seed}

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseSpec":
        return cls(position_std=data.get("position_std", 0.0),
                   speed_std=data.get("speed_std", 0.0),
                   seed=data.get("seed", 0))


@dataclass(frozen=True)
class LeaderPath:
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray


def generate_leader(script: LeaderScript, dt: float,
                    total: float | None = None) -> LeaderPath:
    """Sample the scripted leader at step ``dt`` over ``total`` seconds.

    Positions and speeds are evaluated exactly from the segment boundaries
    (no accumulation error).
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if total is None:
        total = script.total_duration
    if total > script.total_duration + 1e-9:
        raise ValueError(f"script covers {script.total_duration} s, "
                         f"{total} s requested")
    # segment boundary times, speeds and positions
    bt = [0.0]
    bv = [script.initial_speed]
    bx = [script.initial_position]
    for duration, accel in script.segments:
        bt.append(bt[-1] + duration)
        bx.append(bx[-1] + bv[-1] * duration + 0.5 * accel * duration ** 2)
        bv.append(bv[-1] + accel * duration)

    n = int(round(total / dt)) + 1
    t = np.arange(n) * dt
    x = np.empty(n)
    v = np.empty(n)
    seg = 0
    for i, ti in enumerate(t):
        while seg + 1 < len(script.segments) and ti >= bt[seg + 1]:
            seg += 1
        tau = ti - bt[seg]
        accel = script.segments[seg][1]
        v[i] = max(0.0, bv[seg] + accel * tau)
        x[i] = bx[seg] + bv[seg] * tau + 0.5 * accel * tau * tau
    return LeaderPath(t=t, x=x, v=v)


def generate_event(model: ModelKind, p_true: ParameterSet,
                   script: LeaderScript, init_gap: float, dt: float,
                   noise: NoiseSpec | None = None, *,
                   event_id: str = "synth-000",
                   lead_length: float = 5.0) -> CFEvent:
    """Simulate a ground-truth driver behind a scripted leader.

    The follower starts ``init_gap`` meters behind the leader at the leader's
    initial speed. Noise, when requested, is added to the recorded positions
    and speeds after the simulation (order: leader position, leader speed,
    follower position, follower speed); speeds are clamped at zero. The true
    parameters travel in the event metadata.
    """
    if not init_gap > 0:
        raise ValueError(f"init_gap must be > 0, got {init_gap}")
    noise = noise or NoiseSpec()
    lead = generate_leader(script, dt)
    x_start = float(lead.x[0]) - lead_length - init_gap
    n = len(lead.t)
    lengths = np.full(n, float(lead_length))
    filled, vs, xs, gaps, dvs, sstars, collided, step = _run_core(
        model, p_true, dt, lead.x, lead.v, lengths,
        x_start, script.initial_speed)
    if collided:
        raise GenerationError(
            f"collision at step {step} ({step * dt:.1f} s); "
            "use a gentler script or a larger initial gap")

    x_lead = lead.x.copy()
    v_lead = lead.v.copy()
    x_foll = xs
    v_foll = vs
    rng = np.random.default_rng(noise.seed)
    x_lead = x_lead + rng.normal(0.0, noise.position_std, n)
    v_lead = np.maximum(0.0, v_lead + rng.normal(0.0, noise.speed_std, n))
    x_foll = x_foll + rng.normal(0.0, noise.position_std, n)
    v_foll = np.maximum(0.0, v_foll + rng.normal(0.0, noise.speed_std, n))

    traj = Trajectory.from_arrays(
        t=lead.t, v_lead=v_lead, v_foll=v_foll, x_lead=x_lead, x_foll=x_foll,
        lead_length=np.full(n, lead_length), dt=dt)
    return CFEvent.from_trajectory(
        traj, event_id=event_id, source="synthetic",
        metadata={"p_true": p_true.as_dict(), "model": model.value,
                  "script": script.to_dict(), "init_gap": init_gap,
                  "noise": noise.to_dict(), "lead_length": lead_length})


@dataclass(frozen=True)
class BenchmarkCase:
    """Everything needed to (re)generate one benchmark event."""

    event_id: str
    model: ModelKind
    p_true: ParameterSet
    script: LeaderScript
    init_gap: float
    dt: float
    noise: NoiseSpec
    lead_length: float = 5.0

    def generate(self) -> CFEvent:
        return generate_event(self.model, self.p_true, self.script,
                              self.init_gap, self.dt, self.noise,
                              event_id=self.event_id,
                              lead_length=self.lead_length)

    def to_dict(self) -> dict:
        return {"event_id": self.event_id, "model": self.model.value,
                "p_true": self.p_true.as_dict(),
                "script": self.script.to_dict(), "init_gap": self.init_gap,
                "dt": self.dt, "noise": self.noise.to_dict(),
                "lead_length": self.lead_length}

    @classmethod
    def from_dict(cls, data: dict) -> "BenchmarkCase":
        return cls(event_id=data["event_id"],
                   model=ModelKind.parse(data["model"]),
                   p_true=ParameterSet.from_dict(data["p_true"]),
                   script=LeaderScript.from_dict(data["script"]),
                   init_gap=data["init_gap"], dt=data["dt"],
                   noise=NoiseSpec.from_dict(data["noise"]),
                   lead_length=data.get("lead_length", 5.0))


def _draw_true_params(rng: np.random.Generator) -> ParameterSet:
    # stays comfortably inside the calibration bounds so recovery is fair;
    # a and b sit in the human comfortable range
    return ParameterSet(
        a=float(rng.uniform(0.7, 1.6)),
        b=float(rng.uniform(0.9, 2.2)),
        v0=float(rng.uniform(26.0, 34.0)),
        delta=4.0,
        s0=2.0,
        s1=0.0,
        T=float(rng.uniform(1.0, 2.2)),
    )


def _steady_script(rng, u):
    return LeaderScript(segments=((40.0, 0.0),), initial_speed=u)


def _braking_pulse_script(rng, u):
    brake = float(rng.uniform(1.5, 3.0))
    hold = float(rng.uniform(3.0, 6.0))
    pause = float(rng.uniform(4.0, 8.0))
    tail = float(rng.uniform(8.0, 12.0))
    if u - brake * hold < 3.0:
        hold = (u - 3.0) / brake
    drop = brake * hold
    return LeaderScript(segments=(
        (8.0, 0.0),
        (hold, -brake),
        (pause, 0.0),
        (drop, 1.0),
        (tail, 0.0),
    ), initial_speed=u)


def _stop_and_go_script(rng, u):
    brake = float(rng.uniform(2.0, 3.5))
    hold = u / brake
    dwell = float(rng.uniform(2.0, 4.0))
    accel = float(rng.uniform(1.0, 1.8))
    rise = u / accel
    return LeaderScript(segments=(
        (6.0, 0.0),
        (hold, -brake),
        (dwell, 0.0),
        (rise, accel),
        (12.0, 0.0),
    ), initial_speed=u)


def _free_prelude_script(rng, u):
    # leader starts fast and far ahead, settles to a following speed, then
    # pulses; the follower drives freely before catching up
    slow = float(rng.uniform(4.0, 7.0))
    return LeaderScript(segments=(
        (10.0, 0.0),
        (slow, -1.5),
        (15.0, 0.0),
        (4.0, -1.2),
        (4.8, 1.0),
        (10.0, 0.0),
    ), initial_speed=u)


_SCRIPT_FAMILIES = (
    ("braking_pulse", _braking_pulse_script),
    ("stop_and_go", _stop_and_go_script),
    ("free_prelude", _free_prelude_script),
    ("braking_pulse", _braking_pulse_script),
    ("stop_and_go", _stop_and_go_script),
    ("free_prelude", _free_prelude_script),
    ("braking_pulse", _braking_pulse_script),
    ("stop_and_go", _stop_and_go_script),
    ("free_prelude", _free_prelude_script),
    ("steady", _steady_script),
)


def benchmark_cases(n_events: int = 50, seed: int = 7,
                    position_std: float = 0.0, speed_std: float = 0.0,
                    dt: float = 0.1,
                    model: ModelKind = ModelKind.IDM) -> list[BenchmarkCase]:
    """Seeded benchmark specification: scripts, true parameters, noise.

    Script families rotate through braking pulses, stop-and-go oscillation,
    free-driving preludes and steady following. Identical arguments always
    produce the identical case list.
    """
    rng = np.random.default_rng(seed)
    cases = []
    for k in range(n_events):
        family, builder = _SCRIPT_FAMILIES[k % len(_SCRIPT_FAMILIES)]
        p_true = _draw_true_params(rng)
        # following near the desired speed, as on an uncongested highway
        u = float(rng.uniform(0.82, 0.93) * p_true.v0)
        script = builder(rng, u)
        if family == "free_prelude":
            init_gap = float(rng.uniform(80.0, 120.0))
        else:
            factor = float(rng.uniform(0.9, 1.4))
            init_gap = factor * equilibrium_gap(p_true, u)
        noise_seed = int(rng.integers(0, 2 ** 31 - 1))
        cases.append(BenchmarkCase(
            event_id=f"synth-{k:03d}", model=model, p_true=p_true,
            script=script, init_gap=init_gap, dt=dt,
            noise=NoiseSpec(position_std=position_std, speed_std=speed_std,
                            seed=noise_seed)))
    return cases


def benchmark_suite(n_events: int = 50, seed: int = 7,
                    position_std: float = 0.0, speed_std: float = 0.0,
                    dt: float = 0.1,
                    model: ModelKind = ModelKind.IDM) -> list[CFEvent]:
    """Generate the benchmark events themselves."""
    return [case.generate() for case in benchmark_cases(
        n_events=n_events, seed=seed, position_std=position_std,
        speed_std=speed_std, dt=dt, model=model)]
