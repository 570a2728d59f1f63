import numpy as np
import pytest

from idmcal import (CFEvent, Trajectory, TrajectoryError, derive_kinematics,
                    extract_cf_events, parse_trajectory_csv, read_event_csv,
                    write_event_csv)

from .conftest import constant_trajectory

HEADER = ("time_s,lead_pos_m,lead_speed_mps,foll_pos_m,foll_speed_mps,"
          "lead_length_m")


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestParse:
    def test_well_formed_10hz(self, tmp_path):
        path = write(tmp_path, "ok.csv", HEADER + "\n"
                     "0.0,100.0,20.0,55.0,20.0,5.0\n"
                     "0.1,102.0,20.0,57.0,20.0,5.0\n"
                     "0.2,104.0,20.0,59.0,20.0,5.0\n")
        traj = parse_trajectory_csv(path)
        assert traj.n_samples == 3
        assert traj.dt == pytest.approx(0.1)
        assert traj.gap[0] == pytest.approx(40.0)

    def test_non_monotonic_time_names_row(self, tmp_path):
        path = write(tmp_path, "bad.csv", HEADER + "\n"
                     "0.0,100.0,20.0,55.0,20.0,5.0\n"
                     "0.1,102.0,20.0,57.0,20.0,5.0\n"
                     "0.1,104.0,20.0,59.0,20.0,5.0\n")
        with pytest.raises(TrajectoryError, match="row 3"):
            parse_trajectory_csv(path)

    def test_non_numeric_cell_names_row(self, tmp_path):
        path = write(tmp_path, "nan.csv", HEADER + "\n"
                     "0.0,100.0,20.0,55.0,20.0,5.0\n"
                     "0.1,oops,20.0,57.0,20.0,5.0\n"
                     "0.2,104.0,20.0,59.0,20.0,5.0\n")
        with pytest.raises(TrajectoryError, match="row 2"):
            parse_trajectory_csv(path)

    def test_missing_column(self, tmp_path):
        path = write(tmp_path, "short.csv",
                     "time_s,lead_speed_mps\n0.0,20.0\n0.1,20.0\n")
        with pytest.raises(TrajectoryError, match="missing required"):
            parse_trajectory_csv(path)

    def test_gap_only_file_preserves_gap_exactly(self, tmp_path):
        gaps = [40.125, 40.25, 40.5, 41.0]
        rows = "".join(f"{0.1*i},{20.0},{20.0},{g}\n"
                       for i, g in enumerate(gaps))
        path = write(tmp_path, "gap.csv",
                     "time_s,lead_speed_mps,foll_speed_mps,gap_m\n" + rows)
        traj = parse_trajectory_csv(path)
        # follower position synthesized as the 0-anchored speed integral
        assert traj.x_foll[0] == 0.0
        assert traj.x_foll[1] == pytest.approx(2.0)
        # the gap column stays authoritative, bit for bit
        assert traj.gap.tolist() == gaps

    def test_schema_mapping(self, tmp_path):
        path = write(tmp_path, "mapped.csv",
                     "t,vl,vf,g\n0.0,20.0,20.0,40.0\n0.1,20.0,20.0,40.0\n")
        traj = parse_trajectory_csv(path, schema={
            "time_s": "t", "lead_speed_mps": "vl", "foll_speed_mps": "vf",
            "gap_m": "g"})
        assert traj.n_samples == 2

    def test_negative_speed_rejected(self, tmp_path):
        path = write(tmp_path, "neg.csv", HEADER + "\n"
                     "0.0,100.0,20.0,55.0,-1.0,5.0\n"
                     "0.1,102.0,20.0,57.0,20.0,5.0\n")
        with pytest.raises(TrajectoryError, match="v_foll.*row 1"):
            parse_trajectory_csv(path)


class TestDerive:
    def test_definitional_arithmetic(self):
        traj = Trajectory.from_arrays(
            t=[0.0, 0.1], v_lead=[18.0, 18.0], v_foll=[20.0, 20.0],
            x_lead=[100.0, 101.8], x_foll=[55.0, 57.0],
            lead_length=[5.0, 5.0])
        d = derive_kinematics(traj)[0]
        assert d.gap == pytest.approx(40.0)
        assert d.dv == pytest.approx(2.0)
        assert d.tg == pytest.approx(2.0)

    def test_standstill_time_gap_infinite(self):
        traj = Trajectory.from_arrays(
            t=[0.0, 0.1], v_lead=[0.0, 0.0], v_foll=[0.0, 0.0],
            x_lead=[20.0, 20.0], x_foll=[10.0, 10.0],
            lead_length=[0.0, 0.0])
        d = derive_kinematics(traj)
        assert d[0].gap == pytest.approx(10.0)
        assert d[0].tg == np.inf

    def test_equal_speeds_zero_dv(self):
        traj = constant_trajectory(v=22.0)
        for d in derive_kinematics(traj)[:5]:
            assert d.dv == 0.0


class TestExtract:
    def test_uniform_in_band(self):
        traj = constant_trajectory(v=20.0, gap=40.0, duration=25.0)  # tg = 2
        events = extract_cf_events(traj)
        assert len(events) == 1
        assert events[0].duration == pytest.approx(25.0)
        assert events[0].n_samples == traj.n_samples

    def test_out_of_band(self):
        traj = constant_trajectory(v=20.0, gap=70.0, duration=25.0)  # tg = 3.5
        assert extract_cf_events(traj) == []

    def test_window_selection_and_min_duration(self):
        # in-band only during [5, 26] and [40, 55]: the 15 s run is too short
        dt = 0.1
        n = 601
        t = np.arange(n) * dt
        v = 20.0
        gap = np.full(n, 70.0)  # tg 3.5, out of band
        gap[(t >= 5.0) & (t <= 26.0)] = 40.0  # tg 2.0
        gap[(t >= 40.0) & (t <= 55.0)] = 40.0
        x_foll = v * t
        traj = Trajectory.from_arrays(
            t=t, v_lead=np.full(n, v), v_foll=np.full(n, v),
            x_lead=x_foll + gap, x_foll=x_foll, gap=gap)
        events = extract_cf_events(traj, tg_min=0.25, tg_max=3.0,
                                   min_duration=20.0)
        assert len(events) == 1
        assert events[0].duration == pytest.approx(21.0)
        assert events[0].t[0] == pytest.approx(5.0)

    def test_every_sample_in_band(self):
        rng = np.random.default_rng(11)
        n = 400
        t = np.arange(n) * 0.1
        v = 20.0
        gap = 40.0 + np.cumsum(rng.normal(0.0, 0.5, n))
        x_foll = v * t
        traj = Trajectory.from_arrays(
            t=t, v_lead=np.full(n, v), v_foll=np.full(n, v),
            x_lead=x_foll + gap, x_foll=x_foll, gap=gap)
        for event in extract_cf_events(traj, min_duration=2.0):
            assert np.all(event.tg >= 0.25)
            assert np.all(event.tg <= 3.0)

    def test_idempotent(self):
        traj = constant_trajectory(v=20.0, gap=40.0, duration=25.0)
        event = extract_cf_events(traj)[0]
        again = extract_cf_events(event.to_trajectory())
        assert len(again) == 1
        assert again[0].n_samples == event.n_samples
        np.testing.assert_array_equal(again[0].gap, event.gap)

    def test_bad_thresholds(self):
        traj = constant_trajectory()
        with pytest.raises(ValueError):
            extract_cf_events(traj, tg_min=3.0, tg_max=0.25)
        with pytest.raises(ValueError):
            extract_cf_events(traj, min_duration=0.0)


class TestRoundTrip:
    def test_event_csv_round_trip_is_lossless(self, tmp_path, pulse_event):
        path = tmp_path / "event.csv"
        write_event_csv(pulse_event, path)
        back = read_event_csv(path, event_id=pulse_event.event_id,
                              source=pulse_event.source)
        for name in ("t", "v_foll", "dv", "gap", "tg", "x_lead", "v_lead",
                     "x_foll", "lead_length"):
            np.testing.assert_array_equal(getattr(back, name),
                                          getattr(pulse_event, name),
                                          err_msg=name)

    def test_rewrite_is_byte_identical(self, tmp_path, pulse_event):
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        write_event_csv(pulse_event, first)
        write_event_csv(read_event_csv(first), second)
        assert first.read_bytes() == second.read_bytes()

    def test_gap_reconstruction_within_tolerance(self, tmp_path, pulse_event):
        path = tmp_path / "event.csv"
        write_event_csv(pulse_event, path)
        back = read_event_csv(path)
        recomputed = back.x_lead - back.x_foll - back.lead_length
        np.testing.assert_allclose(recomputed, pulse_event.gap, atol=1e-9)


class TestTrajectoryValidation:
    def test_needs_two_samples(self):
        with pytest.raises(TrajectoryError):
            Trajectory.from_arrays(t=[0.0], v_lead=[1.0], v_foll=[1.0],
                                   gap=[10.0])

    def test_non_uniform_sampling_rejected(self):
        with pytest.raises(TrajectoryError, match="non-uniform"):
            Trajectory.from_arrays(
                t=[0.0, 0.1, 0.3], v_lead=[1.0] * 3, v_foll=[1.0] * 3,
                gap=[10.0] * 3, dt=0.1)

    def test_event_metadata_and_source(self, pulse_event):
        assert pulse_event.source == "synthetic"
        assert pulse_event.metadata["p_true"]["T"] == 1.5
