import numpy as np
import pytest

from idmcal import (CFEvent, ModelKind, ParameterSet, Trajectory,
                    equilibrium_gap)
from idmcal.synth import LeaderScript, generate_event


@pytest.fixture
def p_std() -> ParameterSet:
    """Baseline parameter set used in the hand-derived examples."""
    return ParameterSet(a=1.0, b=1.5, v0=30.0, delta=4.0, s0=2.0, s1=0.0,
                        T=1.5)


@pytest.fixture
def pulse_event(p_std) -> CFEvent:
    """Noise-free event: leader brakes, holds, recovers to its start speed."""
    script = LeaderScript(segments=((5.0, 0.0), (3.0, -3.0), (4.0, 0.0),
                                    (9.0, 1.0), (10.0, 0.0)),
                          initial_speed=25.0)
    return generate_event(ModelKind.IDM, p_std, script,
                          init_gap=equilibrium_gap(p_std, 25.0), dt=0.1,
                          event_id="pulse")


def constant_trajectory(v: float = 20.0, gap: float = 40.0,
                        duration: float = 25.0, dt: float = 0.1,
                        lead_length: float = 5.0) -> Trajectory:
    """Uniform-motion trajectory with a constant observed gap."""
    n = int(round(duration / dt)) + 1
    t = np.arange(n) * dt
    x_foll = 10.0 + v * t
    x_lead = x_foll + gap + lead_length
    return Trajectory.from_arrays(
        t=t, v_lead=np.full(n, v), v_foll=np.full(n, v),
        x_lead=x_lead, x_foll=x_foll, lead_length=np.full(n, lead_length),
        dt=dt)
