"""Command-line interface: extract, calibrate, synth, report.

Outputs are deterministic (no timestamps) and schema-versioned; per-event
results are line-delimited JSON, aggregates plain CSV. Exit codes: 0 success,
2 configuration error, 3 parse error, 4 runtime failure.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import click
import yaml

from . import SCHEMA_VERSION
from .calibrate import ParameterSpace, calibrate_batch
from .compliance import five_number_summary
from .models import ModelKind
from .objectives import Mop, ObjectiveSpec
from .optimize import OptimizerConfig
from .synth import BenchmarkCase, benchmark_cases
from .trajectory import (MIN_DURATION_DEFAULT, TG_MAX_DEFAULT, TG_MIN_DEFAULT,
                         TrajectoryError, extract_cf_events,
                         parse_trajectory_csv, read_event_csv,
                         write_event_csv)

EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_RUNTIME = 4


class CliError(click.ClickException):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise CliError(f"cannot read config file: {exc}", EXIT_CONFIG)
    except yaml.YAMLError as exc:
        raise CliError(f"malformed config file: {exc}", EXIT_CONFIG)
    if not isinstance(data, dict):
        raise CliError("config file must contain a mapping", EXIT_CONFIG)
    return data


def _setting(flag, config: dict, key: str, default):
    """CLI flag beats config file beats default."""
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    return default


def _optimizer_config(config: dict) -> OptimizerConfig:
    section = config.get("optimizer", {})
    if not isinstance(section, dict):
        raise CliError("config key 'optimizer' must be a mapping", EXIT_CONFIG)
    valid = OptimizerConfig().as_dict()
    unknown = set(section) - set(valid)
    if unknown:
        raise CliError(f"unknown optimizer option(s): {sorted(unknown)}",
                       EXIT_CONFIG)
    try:
        return OptimizerConfig(**{**valid, **section})
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad optimizer option: {exc}", EXIT_CONFIG)


def _parameter_space(space_name: str, bounds_file: str | None) -> ParameterSpace:
    if bounds_file is not None:
        if space_name not in (None, "custom"):
            raise CliError("--bounds implies --space custom", EXIT_CONFIG)
        try:
            with open(bounds_file, encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise CliError(f"cannot read bounds file: {exc}", EXIT_CONFIG)
        bounds = {}
        fixed = {}
        for name, value in data.items():
            if isinstance(value, (list, tuple)) and len(value) == 2:
                bounds[name] = (float(value[0]), float(value[1]))
            else:
                fixed[name] = float(value)
        try:
            return ParameterSpace.custom(bounds, fixed)
        except ValueError as exc:
            raise CliError(f"bad bounds file: {exc}", EXIT_CONFIG)
    if space_name == "custom":
        raise CliError("--space custom requires --bounds <file>", EXIT_CONFIG)
    try:
        return ParameterSpace.from_name(space_name or "drone4")
    except ValueError as exc:
        raise CliError(str(exc), EXIT_CONFIG)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _read_results(path: Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise CliError(f"{path}:{line_no}: bad JSON record: {exc}",
                               EXIT_PARSE)
    return records


@click.group()
def main() -> None:
    """Car-following model calibration and safety-compliance evaluation."""


@main.command("extract")
@click.argument("inputs", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False),
              help="Output directory for event CSVs and the manifest.")
@click.option("--tg-min", type=float, default=None,
              help=f"Lower time-gap bound, s [default {TG_MIN_DEFAULT}].")
@click.option("--tg-max", type=float, default=None,
              help=f"Upper time-gap bound, s [default {TG_MAX_DEFAULT}].")
@click.option("--min-duration", type=float, default=None,
              help=f"Minimum event duration, s [default {MIN_DURATION_DEFAULT}].")
@click.option("--source", default="drone", show_default=True,
              help="Dataset tag stored with each event.")
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="YAML config file.")
def cmd_extract(inputs, out, tg_min, tg_max, min_duration, source,
                config_path) -> None:
    """Extract car-following events from trajectory CSV files."""
    config = _load_config(config_path)
    selection = config.get("selection", {})
    tg_min = float(_setting(tg_min, selection, "tg_min", TG_MIN_DEFAULT))
    tg_max = float(_setting(tg_max, selection, "tg_max", TG_MAX_DEFAULT))
    min_duration = float(_setting(min_duration, selection, "min_duration",
                                  MIN_DURATION_DEFAULT))
    if not tg_min < tg_max:
        raise CliError(f"tg-min must be < tg-max ({tg_min} >= {tg_max})",
                       EXIT_CONFIG)
    if not min_duration > 0:
        raise CliError("min-duration must be > 0", EXIT_CONFIG)

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_events = []
    for input_path in inputs:
        stem = Path(input_path).stem
        try:
            traj = parse_trajectory_csv(input_path)
        except TrajectoryError as exc:
            raise CliError(f"{input_path}: {exc}", EXIT_PARSE)
        events = extract_cf_events(traj, tg_min, tg_max, min_duration,
                                   source=source, id_prefix=stem)
        for event in events:
            filename = f"{event.event_id}.csv"
            write_event_csv(event, out_dir / filename)
            manifest_events.append({
                "id": event.event_id,
                "file": filename,
                "duration_s": event.duration,
                "n_samples": event.n_samples,
                "dt": event.dt,
                "source": event.source,
            })
    _write_json(out_dir / "manifest.json", {
        "schema_version": SCHEMA_VERSION,
        "kind": "events",
        "selection": {"tg_min": tg_min, "tg_max": tg_max,
                      "min_duration": min_duration},
        "events": manifest_events,
    })
    click.echo(f"extracted {len(manifest_events)} event(s) from "
               f"{len(inputs)} file(s) into {out_dir}")


@main.command("synth")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=None, help="RNG seed [default 7].")
@click.option("--events", "n_events", type=int, default=None,
              help="Number of events [default 50].")
@click.option("--position-noise", type=float, default=None,
              help="Position noise std, m [default 0].")
@click.option("--speed-noise", type=float, default=None,
              help="Speed noise std, m/s [default 0].")
@click.option("--model", default=None, help="idm or idm+ [default idm].")
@click.option("--dt", type=float, default=None,
              help="Sample interval, s [default 0.1].")
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None)
def cmd_synth(out, seed, n_events, position_noise, speed_noise, model, dt,
              config_path) -> None:
    """Generate the seeded synthetic benchmark corpus."""
    config = _load_config(config_path)
    section = config.get("synth", {})
    seed = int(_setting(seed, section, "seed", 7))
    n_events = int(_setting(n_events, section, "events", 50))
    position_noise = float(_setting(position_noise, section,
                                    "position_noise", 0.0))
    speed_noise = float(_setting(speed_noise, section, "speed_noise", 0.0))
    dt = float(_setting(dt, section, "dt", 0.1))
    model_name = _setting(model, section, "model", "idm")
    try:
        kind = ModelKind.parse(model_name)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_CONFIG)
    if n_events <= 0:
        raise CliError("--events must be > 0", EXIT_CONFIG)

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cases = benchmark_cases(n_events=n_events, seed=seed,
                            position_std=position_noise,
                            speed_std=speed_noise, dt=dt, model=kind)
    manifest_events = []
    for case in cases:
        try:
            event = case.generate()
        except Exception as exc:
            raise CliError(f"{case.event_id}: generation failed: {exc}",
                           EXIT_RUNTIME)
        filename = f"{event.event_id}.csv"
        write_event_csv(event, out_dir / filename)
        entry = case.to_dict()
        entry["file"] = filename
        entry["duration_s"] = event.duration
        entry["n_samples"] = event.n_samples
        manifest_events.append(entry)
    _write_json(out_dir / "manifest.json", {
        "schema_version": SCHEMA_VERSION,
        "kind": "synthetic-events",
        "suite": {"seed": seed, "events": n_events,
                  "position_noise": position_noise,
                  "speed_noise": speed_noise, "dt": dt,
                  "model": kind.value},
        "events": manifest_events,
    })
    click.echo(f"generated {len(manifest_events)} synthetic event(s) "
               f"into {out_dir}")


def _load_events(inputs) -> list:
    events = []
    for input_path in inputs:
        path = Path(input_path)
        if path.is_dir():
            manifest = path / "manifest.json"
            if manifest.exists():
                data = json.loads(manifest.read_text(encoding="utf-8"))
                for entry in data.get("events", []):
                    events.append(read_event_csv(
                        path / entry["file"],
                        event_id=entry.get("id", entry.get("event_id")),
                        source=entry.get("source", "file")))
            else:
                for csv_path in sorted(path.glob("*.csv")):
                    events.append(read_event_csv(csv_path))
        else:
            events.append(read_event_csv(path))
    return events


@main.command("calibrate")
@click.argument("inputs", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--model", default=None, help="idm or idm+ [default idm].")
@click.option("--objective", default=None,
              help="spacing, speed, timegap or combined [default spacing].")
@click.option("--alpha", type=float, default=None,
              help="Observed-spacing weight (combined objective only).")
@click.option("--beta", type=float, default=None,
              help="Safety-spacing weight (combined objective only).")
@click.option("--space", "space_name", default=None,
              help="simulator6, drone4 or custom [default drone4].")
@click.option("--bounds", "bounds_file", type=click.Path(exists=True),
              default=None, help="YAML bounds file for a custom space.")
@click.option("--jobs", type=int, default=None,
              help="Worker processes [default 1].")
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None)
def cmd_calibrate(inputs, out, model, objective, alpha, beta, space_name,
                  bounds_file, jobs, config_path) -> None:
    """Calibrate every event and write per-event plus aggregate results."""
    config = _load_config(config_path)
    model_name = _setting(model, config, "model", "idm")
    objective_name = _setting(objective, config, "objective", "spacing")
    try:
        kind = ModelKind.parse(model_name)
        mop = Mop.parse(objective_name)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_CONFIG)
    if (alpha is not None or beta is not None) and mop is not Mop.COMBINED_SAFETY:
        raise CliError("--alpha/--beta only apply to --objective combined",
                       EXIT_CONFIG)
    alpha = float(_setting(alpha, config, "alpha", 1.0))
    beta = float(_setting(beta, config, "beta", 1.0))
    penalty = float(config.get("collision_penalty", 1e3))
    try:
        spec = ObjectiveSpec(mop=mop, alpha=alpha, beta=beta,
                             collision_penalty=penalty)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_CONFIG)
    space = _parameter_space(_setting(space_name, config, "space", None),
                             bounds_file or config.get("bounds_file"))
    cfg = _optimizer_config(config)
    jobs = int(_setting(jobs, config, "jobs", 1))
    if jobs < 1:
        raise CliError("--jobs must be >= 1", EXIT_CONFIG)

    try:
        events = _load_events(inputs)
    except TrajectoryError as exc:
        raise CliError(str(exc), EXIT_PARSE)
    if not events:
        raise CliError("no events found in the given inputs", EXIT_CONFIG)

    try:
        batch = calibrate_batch(events, kind, space, spec, cfg, jobs=jobs)
    except Exception as exc:
        raise CliError(f"calibration failed: {exc}", EXIT_RUNTIME)

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "results.jsonl"
    with open(results_path, "w", encoding="utf-8") as fh:
        by_id = {r.event_id: r for r in batch.results}
        failed = dict(batch.failures)
        for event in events:
            if event.event_id in by_id:
                record = by_id[event.event_id].as_dict()
                record["schema_version"] = SCHEMA_VERSION
                record["space"] = space.mode.value
            else:
                record = {"schema_version": SCHEMA_VERSION,
                          "event_id": event.event_id,
                          "error": failed.get(event.event_id, "unknown")}
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    with open(out_dir / "aggregate.csv", "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["schema_version", "metric", "count", "min", "q1",
                         "median", "q3", "max"])
        for metric, summary in batch.summaries.items():
            writer.writerow([SCHEMA_VERSION, metric, len(batch.results),
                             *(repr(v) for v in (summary.min, summary.q1,
                                                 summary.median, summary.q3,
                                                 summary.max))])

    lines = [f"calibrated {len(batch.results)}/{len(events)} event(s); "
             f"model={kind.value} objective={mop.value} space={space.mode.value}"]
    for metric, summary in batch.summaries.items():
        lines.append(f"  {metric:>14}: min={summary.min:.4g} q1={summary.q1:.4g} "
                     f"median={summary.median:.4g} q3={summary.q3:.4g} "
                     f"max={summary.max:.4g}")
    for event_id, message in batch.failures:
        lines.append(f"  FAILED {event_id}: {message}")
    (out_dir / "summary.txt").write_text("\n".join(lines) + "\n",
                                         encoding="utf-8")
    click.echo("\n".join(lines))
    if batch.failures and not batch.results:
        raise CliError("all events failed", EXIT_RUNTIME)


def _boxplot_stats(values: list[float]) -> dict:
    summary = five_number_summary(values)
    iqr = summary.q3 - summary.q1
    lo_fence = summary.q1 - 1.5 * iqr
    hi_fence = summary.q3 + 1.5 * iqr
    inside = [v for v in values if lo_fence <= v <= hi_fence]
    outliers = sorted(v for v in values if v < lo_fence or v > hi_fence)
    return {
        **summary.as_dict(),
        "whisker_low": min(inside) if inside else summary.min,
        "whisker_high": max(inside) if inside else summary.max,
        "outliers": outliers,
    }


_REPORT_METRICS = ("nrmse_spacing", "nrmse_speed", "nrmse_timegap",
                   "nrmse_sstar", "compliance", "objective_value")
_REPORT_PARAMS = ("a", "b", "v0", "delta", "s0", "s1", "T")


@main.command("report")
@click.argument("results", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
def cmd_report(results, out) -> None:
    """Join result files into comparison tables and box-plot data.

    With two or more runs, also writes per-event paired differences against
    the first run (restricted to the events every run shares).
    """
    runs: list[tuple[str, dict[str, dict]]] = []
    for path in results:
        records = _read_results(Path(path))
        label = Path(path).parent.name or Path(path).stem
        if any(label == name for name, _ in runs):
            label = f"{label}-{len(runs)}"
        runs.append((label, {r["event_id"]: r for r in records
                             if "error" not in r}))
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def metric_value(record: dict, metric: str):
        if metric in _REPORT_PARAMS:
            return record.get("params", {}).get(metric)
        return record.get(metric)

    with open(out_dir / "report.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["schema_version", "run", "metric", "count", "min",
                         "q1", "median", "q3", "max"])
        for label, records in runs:
            for metric in _REPORT_METRICS + _REPORT_PARAMS:
                values = [metric_value(r, metric) for r in records.values()]
                values = [v for v in values if v is not None]
                if not values:
                    continue
                summary = five_number_summary(values)
                writer.writerow([SCHEMA_VERSION, label, metric, len(values),
                                 *(repr(v) for v in (summary.min, summary.q1,
                                                     summary.median,
                                                     summary.q3, summary.max))])

    with open(out_dir / "boxplot.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["schema_version", "run", "metric", "count", "min",
                         "q1", "median", "q3", "max", "whisker_low",
                         "whisker_high", "outliers"])
        for label, records in runs:
            for metric in _REPORT_METRICS + _REPORT_PARAMS:
                values = [metric_value(r, metric) for r in records.values()]
                values = [v for v in values if v is not None]
                if not values:
                    continue
                stats = _boxplot_stats(values)
                writer.writerow([SCHEMA_VERSION, label, metric, len(values),
                                 *(repr(stats[k]) for k in
                                   ("min", "q1", "median", "q3", "max",
                                    "whisker_low", "whisker_high")),
                                 ";".join(repr(v) for v in stats["outliers"])])

    if len(runs) >= 2:
        common = set(runs[0][1])
        for _, records in runs[1:]:
            common &= set(records)
        union = set()
        for _, records in runs:
            union |= set(records)
        if common != union:
            click.echo(f"warning: event id sets differ; using the "
                       f"{len(common)} shared event(s)", err=True)
        base_label, base = runs[0]
        with open(out_dir / "paired.csv", "w", newline="",
                  encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["schema_version", "event_id", "run", "metric",
                             "value", "baseline", "delta"])
            for label, records in runs[1:]:
                for event_id in sorted(common):
                    for metric in _REPORT_METRICS:
                        value = metric_value(records[event_id], metric)
                        ref = metric_value(base[event_id], metric)
                        if value is None or ref is None:
                            continue
                        writer.writerow([SCHEMA_VERSION, event_id, label,
                                         metric, repr(value), repr(ref),
                                         repr(value - ref)])
    click.echo(f"report written to {out_dir}")


if __name__ == "__main__":
    main()
