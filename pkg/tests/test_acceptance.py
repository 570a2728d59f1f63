"""Acceptance suite: one test per criterion, one printed pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s``. The heavy benchmark runs
are shared across criteria through module-scoped fixtures; everything is
seeded and deterministic.
"""

import json
import os
import time

import numpy as np
import pytest
from click.testing import CliRunner

from idmcal import (Box, DerivedSample, KinematicState, ModelKind, Mop,
                    ObjectiveSpec, OptimizerConfig, ParameterSet,
                    ParameterSpace, Trajectory, CFEvent, calibrate_batch,
                    compliance_series, compliance_step, desired_gap,
                    equilibrium_gap, idm_accel, idm_plus_accel, nrmse,
                    optimize, simulate_follower, write_event_csv)
from idmcal.cli import main as cli_main
from idmcal.synth import (LeaderScript, benchmark_cases, benchmark_suite,
                          generate_event)

JOBS = min(8, os.cpu_count() or 1)
SPACE = ParameterSpace.drone_4p()
SPACING = ObjectiveSpec(Mop.SPACING)
COMBINED = ObjectiveSpec(Mop.COMBINED_SAFETY, alpha=1.0, beta=1.0)

# canonical noisy benchmark: drone-like position accuracy with
# position-derived speed noise
NOISY = dict(position_std=0.5, speed_std=0.5)


def report(number: int, description: str, ok: bool, elapsed: float) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"\n[{status}] criterion {number}: {description} "
          f"({elapsed:.1f} s)")
    assert ok, f"criterion {number} failed: {description}"


@pytest.fixture(scope="module")
def zero_noise_run():
    cases = benchmark_cases(n_events=50, seed=7)
    events = [case.generate() for case in cases]
    batch = calibrate_batch(events, ModelKind.IDM, SPACE, SPACING, jobs=JOBS)
    assert not batch.failures
    return cases, batch.results


@pytest.fixture(scope="module")
def noisy_runs():
    events = benchmark_suite(n_events=50, seed=7, **NOISY)
    spacing = calibrate_batch(events, ModelKind.IDM, SPACE, SPACING,
                              jobs=JOBS)
    combined = calibrate_batch(events, ModelKind.IDM, SPACE, COMBINED,
                               jobs=JOBS)
    plus = calibrate_batch(events, ModelKind.IDM_PLUS, SPACE, SPACING,
                           jobs=JOBS)
    for batch in (spacing, combined, plus):
        assert not batch.failures
    return spacing.results, combined.results, plus.results


def test_criterion_1_unit_equations():
    start = time.perf_counter()
    p = ParameterSet(a=1.0, b=1.5, v0=30.0, delta=4.0, s0=2.0, s1=0.0, T=1.5)
    ok = abs(desired_gap(p, 20.0, 0.0) - 32.0) < 1e-9
    ok &= abs(desired_gap(p, 20.0, 2.0) - 48.330) <= 1e-3
    ok &= desired_gap(p, 0.0, 0.0) == p.s0
    ok &= abs(idm_accel(p, KinematicState(20.0, 0.0, 32.0)) - (-0.19753)) <= 1e-4
    ok &= abs(idm_accel(p, KinematicState(30.0, 0.0, 1e9))) < 1e-6
    ok &= abs(idm_accel(p, KinematicState(0.0, 0.0, 1e9)) - 1.0) <= 1e-6
    ok &= abs(idm_plus_accel(p, KinematicState(20.0, 0.0, 32.0))) <= 1e-9
    ok &= abs(idm_plus_accel(p, KinematicState(30.0, 0.0, 1e9))) < 1e-6
    ok &= idm_plus_accel(p, KinematicState(0.0, 0.0, 2.0)) == 0.0
    ok &= abs(equilibrium_gap(p, 20.0) - 35.722) <= 1e-2
    sc, s_req = compliance_step(p, DerivedSample(0.0, 20.0, 0.0, 40.0, 2.0))
    ok &= sc == 1 and abs(s_req - 32.0) < 1e-9
    sc, _ = compliance_step(p, DerivedSample(0.0, 20.0, 0.0, 30.0, 1.5))
    ok &= sc == 0
    sc, _ = compliance_step(p, DerivedSample(0.0, 31.0, -2.0, 80.0, 2.6))
    ok &= sc == 0
    report(1, "hand-derived equation examples", ok,
           time.perf_counter() - start)


def test_criterion_2_equilibrium_preservation():
    start = time.perf_counter()
    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(20):
        p = ParameterSet(a=float(rng.uniform(0.1, 6.0)),
                         b=float(rng.uniform(0.1, 6.0)),
                         v0=float(rng.uniform(20.0, 40.0)),
                         delta=float(rng.uniform(2.0, 4.0)),
                         s0=float(rng.uniform(2.0, 5.0)), s1=0.0,
                         T=float(rng.uniform(0.5, 6.0)))
        v = float(rng.uniform(0.3, 0.85)) * p.v0
        eq = equilibrium_gap(p, v)
        n = 201  # 20 s at dt = 0.1
        t = np.arange(n) * 0.1
        x_foll = v * t
        traj = Trajectory.from_arrays(
            t=t, v_lead=np.full(n, v), v_foll=np.full(n, v),
            x_lead=x_foll + eq, x_foll=x_foll, dt=0.1)
        event = CFEvent.from_trajectory(traj, "eq")
        sim = simulate_follower(ModelKind.IDM, p, event)
        worst = max(worst, float(np.abs(sim.gap_sim - eq).max()))
    report(2, f"equilibrium gap held within 1e-3 m (worst {worst:.2e})",
           worst <= 1e-3, time.perf_counter() - start)


def test_criterion_3_optimizer_on_test_functions():
    start = time.perf_counter()

    def sphere(x):
        return (x[0] - 1.3) ** 2 + (x[1] + 2.1) ** 2

    def rosenbrock(x):
        return 100.0 * (x[1] - x[0] ** 2) ** 2 + (1.0 - x[0]) ** 2

    def rastrigin(x):
        z0, z1 = x[0] - 0.2, x[1] + 0.3
        return (20.0 + z0 * z0 - 10.0 * np.cos(2 * np.pi * z0)
                + z1 * z1 - 10.0 * np.cos(2 * np.pi * z1))

    def branin(x):
        a, b, c = 1.0, 5.1 / (4 * np.pi ** 2), 5.0 / np.pi
        r, s, t = 6.0, 10.0, 1.0 / (8 * np.pi)
        return (a * (x[1] - b * x[0] ** 2 + c * x[0] - r) ** 2
                + s * (1 - t) * np.cos(x[0]) + s)

    def camel(x):
        return ((4.0 - 2.1 * x[0] ** 2 + x[0] ** 4 / 3.0) * x[0] ** 2
                + x[0] * x[1] + (-4.0 + 4.0 * x[1] ** 2) * x[1] ** 2)

    problems = [
        ("sphere", sphere, [(-5.0, 5.0), (-5.0, 5.0)]),
        ("rosenbrock", rosenbrock, [(-2.048, 2.048), (-2.048, 2.048)]),
        ("rastrigin", rastrigin, [(-5.12, 5.12), (-5.12, 5.12)]),
        ("branin", branin, [(-5.0, 10.0), (0.0, 15.0)]),
        ("six-hump-camel", camel, [(-3.0, 3.0), (-2.0, 2.0)]),
    ]
    ok = True
    details = []
    for name, f, bounds in problems:
        xs = np.linspace(bounds[0][0], bounds[0][1], 1000)
        ys = np.linspace(bounds[1][0], bounds[1][1], 1000)
        gx, gy = np.meshgrid(xs, ys)
        oracle = float(f((gx, gy)).min())
        res = optimize(lambda v: float(f(v)), Box.of(bounds),
                       OptimizerConfig())
        good = res.best_value <= oracle + 1e-4
        ok &= good
        details.append(f"{name} {res.best_value - oracle:+.2e}")
    report(3, "optimum within 1e-4 of dense-grid oracle on 5 functions ("
              + ", ".join(details) + ")", ok, time.perf_counter() - start)


def test_criterion_4_parameter_recovery(zero_noise_run):
    start = time.perf_counter()
    cases, results = zero_noise_run
    nrmse_values = [r.errors.nrmse_spacing for r in results]
    median_nrmse = float(np.median(nrmse_values))
    recovered = 0
    for case, result in zip(cases, results):
        p_true, p_fit = case.p_true, result.params
        rel = [abs(getattr(p_fit, n) - getattr(p_true, n)) / getattr(p_true, n)
               for n in ("a", "b", "T")]
        recovered += all(r <= 0.10 for r in rel)
    ok = median_nrmse <= 0.02 and recovered >= 35
    report(4, f"zero-noise recovery: median NRMSE(s) {median_nrmse:.2e} "
              f"<= 0.02, a/b/T within 10% on {recovered}/50 (need >= 35)",
           ok, time.perf_counter() - start)


def test_criterion_5_safety_objective_raises_compliance(noisy_runs):
    start = time.perf_counter()
    spacing, combined, _ = noisy_runs
    comp_s = np.array([r.compliance for r in spacing])
    comp_c = np.array([r.compliance for r in combined])
    n_ge = int(np.sum(comp_c >= comp_s))
    median_s = float(np.median(comp_s))
    median_c = float(np.median(comp_c))
    ok = n_ge >= 40 and median_c > median_s
    report(5, f"combined-objective compliance >= spacing on {n_ge}/50 "
              f"(need >= 40); medians {median_c:.3f} > {median_s:.3f}",
           ok, time.perf_counter() - start)


def test_criterion_6_model_ordering(noisy_runs):
    start = time.perf_counter()
    spacing, _, plus = noisy_runs
    median_idm = float(np.median([r.compliance for r in spacing]))
    median_plus = float(np.median([r.compliance for r in plus]))
    ok = median_idm >= median_plus
    report(6, f"median compliance IDM {median_idm:.3f} >= IDM+ "
              f"{median_plus:.3f} (spacing objective, identical events)",
           ok, time.perf_counter() - start)


def test_criterion_7_property_suites(pulse_event):
    start = time.perf_counter()
    rng = np.random.default_rng(77)
    ok = True

    # NRMSE: scale invariance and zero-iff-equal
    obs = rng.normal(20.0, 4.0, 200)
    sim = obs + rng.normal(0.0, 1.0, 200)
    base = nrmse(obs, sim)
    for c in (3.0, -0.5, 11.0):
        ok &= abs(nrmse(c * obs, c * sim) - base) < 1e-12
    ok &= nrmse(obs, obs) == 0.0 and nrmse(obs, sim) > 0.0

    # compliance monotone in T and in gap
    base_kwargs = dict(a=1.2, b=1.5, v0=30.0, delta=4.0, s0=2.0, s1=0.0)
    last = None
    for T in (0.6, 1.2, 2.0, 3.5):
        sc = compliance_series(ParameterSet(T=T, **base_kwargs),
                               pulse_event).sc
        if last is not None:
            ok &= bool(np.all(sc <= last))
        last = sc
    p = ParameterSet(T=1.5, **base_kwargs)
    for _ in range(50):
        v = float(rng.uniform(1.0, 28.0))
        dv = float(rng.uniform(-3.0, 3.0))
        g1 = float(rng.uniform(1.0, 60.0))
        g2 = g1 + float(rng.uniform(0.1, 40.0))
        tg1 = g1 / v
        tg2 = g2 / v
        sc1, _ = compliance_step(p, DerivedSample(0.0, v, dv, g1, tg1))
        sc2, _ = compliance_step(p, DerivedSample(0.0, v, dv, g2, tg2))
        ok &= sc2 >= sc1

    # optimizer: feasibility, monotone incumbent, determinism
    box = Box.of([(-5.12, 5.12), (-5.12, 5.12)])
    seen = []

    def rastrigin(x):
        seen.append(np.array(x))
        z0, z1 = x[0] - 0.2, x[1] + 0.3
        return float(20.0 + z0 * z0 - 10.0 * np.cos(2 * np.pi * z0)
                     + z1 * z1 - 10.0 * np.cos(2 * np.pi * z1))

    cfg = OptimizerConfig(max_direct_iterations=15,
                          max_function_evaluations=1500)
    res1 = optimize(rastrigin, box, cfg)
    ok &= all(box.contains(x, atol=1e-12) for x in seen)
    ok &= all(res1.trace[i + 1] <= res1.trace[i]
              for i in range(len(res1.trace) - 1))
    res2 = optimize(rastrigin, box, cfg)
    ok &= (res1.best_value == res2.best_value
           and np.array_equal(res1.best_point, res2.best_point)
           and res1.evaluations == res2.evaluations)

    # batch determinism across parallelism
    events = benchmark_suite(n_events=3, seed=11, position_std=0.2,
                             speed_std=0.2)
    fast = OptimizerConfig(max_direct_iterations=8,
                           max_function_evaluations=600,
                           refine_max_iterations=100)
    serial = calibrate_batch(events, ModelKind.IDM, SPACE, SPACING, fast,
                             jobs=1)
    parallel = calibrate_batch(events, ModelKind.IDM, SPACE, SPACING, fast,
                               jobs=8)
    ok &= all(a.params == b.params and a.objective_value == b.objective_value
              for a, b in zip(serial.results, parallel.results))

    report(7, "property suites (NRMSE, compliance monotonicity, optimizer, "
              "batch determinism)", ok, time.perf_counter() - start)


def test_criterion_8_cli_end_to_end(tmp_path):
    start = time.perf_counter()
    runner = CliRunner()
    ok = True

    # synth -> calibrate -> report, then repeat calibrate: byte-identical
    corpus = tmp_path / "events"
    for _ in range(1):
        result = runner.invoke(cli_main, ["synth", "--out", str(corpus),
                                          "--events", "2", "--seed", "7"])
        ok &= result.exit_code == 0
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("optimizer:\n  max_direct_iterations: 10\n"
                   "  max_function_evaluations: 800\n"
                   "  refine_max_iterations: 100\n", encoding="utf-8")
    out1, out2 = tmp_path / "run1", tmp_path / "run2"
    for out in (out1, out2):
        result = runner.invoke(cli_main, ["calibrate", str(corpus), "--out",
                                          str(out), "--config", str(cfg)])
        ok &= result.exit_code == 0
    ok &= ((out1 / "results.jsonl").read_bytes()
           == (out2 / "results.jsonl").read_bytes())
    result = runner.invoke(cli_main, ["report",
                                      str(out1 / "results.jsonl"),
                                      str(out2 / "results.jsonl"),
                                      "--out", str(tmp_path / "report")])
    ok &= result.exit_code == 0
    ok &= (tmp_path / "report" / "paired.csv").exists()

    # one 20 s event at 10 Hz calibrates within 60 s under default budgets
    p = ParameterSet(a=1.3, b=2.0, v0=31.0, delta=4.0, s0=2.0, s1=0.0, T=1.6)
    script = LeaderScript(segments=((5.0, 0.0), (3.0, -2.5), (4.0, 0.0),
                                    (7.5, 1.0), (0.5, 0.0)),
                          initial_speed=24.0)
    event = generate_event(ModelKind.IDM, p, script,
                           init_gap=equilibrium_gap(p, 24.0), dt=0.1,
                           event_id="short")
    assert event.duration == pytest.approx(20.0)
    event_csv = tmp_path / "short.csv"
    write_event_csv(event, event_csv)
    t0 = time.perf_counter()
    result = runner.invoke(cli_main, ["calibrate", str(event_csv), "--out",
                                      str(tmp_path / "timed")])
    elapsed_calibration = time.perf_counter() - t0
    ok &= result.exit_code == 0
    ok &= elapsed_calibration <= 60.0

    report(8, f"CLI pipeline reproducible; 20 s event calibrated in "
              f"{elapsed_calibration:.1f} s (limit 60 s)", ok,
           time.perf_counter() - start)
