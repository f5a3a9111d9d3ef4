"""Command-line front end.

Usage::

    securetag simulate   --config s1.ini --out traces/
    securetag calibrate  --on a.csv b.csv --off c.csv d.csv --out profile.ini
    securetag classify   trace.csv --profile profile.ini [--json]
    securetag attack-sim --config s1.ini --out results/
    securetag report     results/*.json --out table.csv
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import io
from .channel import generate_trace
from .errors import CalibrationDegenerate, ConfigError, DomainError, SecureTagError
from .harness import (ScenarioConfig, check_topology, default_profile, load_config,
                      metrics_params, run_batch, sweep_points)
from .matching import PipelineConfig, calibrate, classify_trace

logger = logging.getLogger("securetag")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DEGENERATE = 4
EXIT_PRECONDITION = 5

REPORT_HEADER = ("scenario", "parameter", "rate_type", "value")


class UsageError(ConfigError):
    pass


def _pipeline(args) -> PipelineConfig:
    cfg = load_config(args.config).pipeline if args.config else PipelineConfig()
    if args.segment_interval is not None:
        cfg = replace(cfg, segment_interval=args.segment_interval)
    return cfg


def _scenario(args) -> ScenarioConfig:
    if not args.config:
        raise UsageError(f"{args.command} needs --config <scenario file>")
    cfg = load_config(args.config)
    return cfg.with_overrides(seed=args.seed, sample_period=args.sample_period,
                              segment_interval=args.segment_interval)


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror}") from None
    return out


def cmd_simulate(args) -> int:
    cfg = _scenario(args)
    out = _out_dir(args)
    if not cfg.seeds:
        logger.warning("scenario %s lists no seeds; nothing written", cfg.name)
        return EXIT_OK
    for link in cfg.links:
        for seed in cfg.seeds:
            spec = replace(link, rng_seed=link.rng_seed + seed, sample_period=cfg.sample_period,
                           duration=cfg.duration)
            path = out / f"{cfg.name}_{link.link_id}_{seed}.csv"
            io.write_trace(generate_trace(spec), path)
            logger.info("wrote %s", path)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    if not args.on or not args.off:
        raise UsageError("calibrate needs --on and --off trace files")
    config = _pipeline(args)
    on = [io.read_trace(p) for p in args.on]
    off = [io.read_trace(p) for p in args.off]
    if args.sample_period is not None:
        logger.warning("--sample-period is ignored by calibrate; traces carry their own timing")
    profile = calibrate(on, off, config)
    out = Path(args.out or "profile.ini")
    if out.is_dir():
        out = out / "profile.ini"
    io.write_profile(profile, out)
    if args.json:
        print(json.dumps(profile.as_dict(), indent=2))
    else:
        print(f"{'class':<8} {'mean_std_large':>15} {'mean_std_small':>15}")
        print(f"{'onbody':<8} {profile.mean_std_large_on:15.4f} {profile.mean_std_small_on:15.4f}")
        print(f"{'offbody':<8} {profile.mean_std_large_off:15.4f} {profile.mean_std_small_off:15.4f}")
        print(f"alpha={profile.alpha:.4f} beta={profile.beta:.4f} threshold={profile.threshold:.4f}")
        print(f"profile written to {out}")
    return EXIT_OK


def cmd_classify(args) -> int:
    if not args.trace:
        raise UsageError("classify needs a trace file")
    if not args.profile:
        raise UsageError("classify needs --profile <file>")
    config = _pipeline(args)
    profile = io.read_profile(args.profile)
    trace = io.read_trace(args.trace)
    rows = []
    for i, d in enumerate(classify_trace(trace, profile, config)):
        rows.append({"index": i, "sigma_large": d.sigma_large, "sigma_small": d.sigma_small,
                     "utility": d.utility, "threshold": profile.threshold,
                     "label": d.label.value, "degenerate": d.degenerate})
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        for r in rows:
            print(f"{r['index']:4d} {r['sigma_large']:9.4f} {r['sigma_small']:9.4f} "
                  f"{r['utility']:9.4f} {r['threshold']:9.4f} {r['label']:<8} "
                  f"{int(r['degenerate'])}")
    return EXIT_OK


def cmd_attack_sim(args) -> int:
    cfg = _scenario(args)
    check_topology(cfg)
    out = _out_dir(args)
    fixed = io.read_profile(cfg.profile_path) if cfg.profile_path else None
    records = []
    points = sweep_points(cfg)
    for parameter, value, point in points:
        profile = fixed or default_profile(point.sample_period, point.pipeline,
                                           point.calibration_seed)
        outcomes, metrics = run_batch(point, profile, workers=args.workers)
        if metrics is None:
            logger.warning("scenario %s lists no seeds; nothing run", cfg.name)
            return EXIT_OK
        tag = cfg.name if len(points) == 1 else f"{cfg.name}_{parameter}_{value:g}"
        for seed, outcome in zip(point.seeds, outcomes):
            io.write_event_log(outcome.event_log, out / f"{tag}_{seed}_events.csv")
        records.append(io.metrics_record(metrics, metrics_params(point, parameter, value)))
    payload = records[0] if len(records) == 1 else records
    path = io.write_metrics(payload, out / f"{cfg.name}_metrics.json")
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        for r in records:
            p = r["params"]
            print(f"{p['scenario']} {p['sweep']}={p['value']:g} mitigation={_fmt(r['mitigation_rate'])} "
                  f"false_alarm={_fmt(r['false_alarm_rate'])} attempts={r['n_attempts']} "
                  f"segments={r['n_segments']}")
        print(f"metrics written to {path}")
    return EXIT_OK


def _fmt(rate):
    return "n/a" if rate is None else f"{rate:.4f}"


def report_rows(paths) -> list:
    """Tidy ``(scenario, parameter, rate_type, value)`` rows from metrics files."""
    rows = []
    for path in paths:
        for record in io.read_metrics(path):
            params = record["params"]
            scenario = params.get("scenario", Path(path).stem)
            sweep = params.get("sweep", "sample_period")
            value = params.get("value", params.get(sweep))
            parameter = f"{sweep}={value:g}" if isinstance(value, (int, float)) else str(sweep)
            for rate_type in ("mitigation_rate", "false_alarm_rate"):
                rate = record[rate_type]
                rows.append((scenario, parameter, rate_type, "" if rate is None else repr(rate)))
    return rows


def cmd_report(args) -> int:
    if not args.metrics:
        raise UsageError("report needs at least one metrics file")
    rows = report_rows(args.metrics)
    fh = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_HEADER)
        writer.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario file (INI)")
    common.add_argument("--out", help="output directory, or output file for calibrate/report")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--seed", type=int, help="run this single seed instead of the configured list")
    common.add_argument("--sample-period", type=float, help="RSS sample period in seconds")
    common.add_argument("--segment-interval", type=float, help="segment length in seconds")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="securetag",
                                     description="On-body link verification from RSS traces.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="generate RSS traces")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", parents=[common], help="learn a profile from labelled traces")
    p.add_argument("--on", nargs="+", default=[], help="on-body trace files")
    p.add_argument("--off", nargs="+", default=[], help="off-body trace files")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("classify", parents=[common], help="label each segment of a trace")
    p.add_argument("trace", nargs="?")
    p.add_argument("--profile")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("attack-sim", parents=[common], help="run attack scenarios over seeds")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_attack_sim)

    p = sub.add_parser("report", parents=[common], help="tidy CSV from metrics files")
    p.add_argument("metrics", nargs="*")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CalibrationDegenerate as exc:
        logger.error("degenerate calibration: %s", exc)
        return EXIT_DEGENERATE
    except ConfigError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_IO
    except (DomainError, SecureTagError) as exc:
        logger.error("%s", exc)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
