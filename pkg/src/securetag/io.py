"""File formats: RSS trace CSV, calibration profile, metrics JSON and event logs.

Every writer is paired with a reader so that write-then-read gives back the
same in-memory values.
"""
from __future__ import annotations

import configparser
import csv
import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .channel import RssTrace
from .errors import ConfigError, DomainError
from .matching import PROFILE_FIELDS, CalibrationProfile
from .protocol import LOG_HEADER, LogEntry, Metrics

TRACE_HEADER = ("t_s", "rss_dbm")
PROFILE_SECTION = "calibration"
METRICS_KEYS = ("mitigation_rate", "false_alarm_rate", "n_attempts", "n_segments", "params")


class FileFormatError(ConfigError):
    """A file does not follow its expected format."""


def write_trace(trace: RssTrace, path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(TRACE_HEADER) + "\n")
        for t, v in zip(trace.timestamps.tolist(), trace.values.tolist()):
            fh.write(f"{t!r},{v}\n")
    return path


def _parse_rss(text: str):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {text!r}")
    return int(value) if value == int(value) else value


def read_trace(path, link_id: str | None = None) -> RssTrace:
    """Read a trace CSV; an empty file gives an empty trace.

    Malformed rows raise :class:`FileFormatError` naming the 1-based line.
    """
    path = Path(path)
    times, values = [], []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is not None and tuple(h.strip() for h in header) != TRACE_HEADER:
            raise FileFormatError(f"{path}: line 1: expected header 't_s,rss_dbm', got {','.join(header)!r}")
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != 2:
                raise FileFormatError(f"{path}: line {line}: expected 2 fields, got {len(row)}")
            try:
                times.append(float(row[0]))
                values.append(_parse_rss(row[1]))
            except ValueError as exc:
                raise FileFormatError(f"{path}: line {line}: {exc}") from None
    dtype = np.int64 if all(isinstance(v, int) for v in values) else float
    try:
        return RssTrace(np.array(times, dtype=float), np.array(values, dtype=dtype),
                        link_id or path.stem)
    except DomainError as exc:
        raise FileFormatError(f"{path}: {exc}") from None


def write_profile(profile: CalibrationProfile, path) -> Path:
    path = Path(path)
    parser = configparser.ConfigParser()
    parser[PROFILE_SECTION] = {name: repr(value) for name, value in profile.as_dict().items()}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        parser.write(fh)
    return path


def read_profile(path) -> CalibrationProfile:
    path = Path(path)
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise FileFormatError(f"{path}: {exc}") from None
    if PROFILE_SECTION not in parser:
        raise FileFormatError(f"{path}: missing [{PROFILE_SECTION}] section")
    section = parser[PROFILE_SECTION]
    missing = [name for name in PROFILE_FIELDS if name not in section]
    if missing:
        raise FileFormatError(f"{path}: missing fields {', '.join(missing)}")
    try:
        return CalibrationProfile(**{name: float(section[name]) for name in PROFILE_FIELDS})
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from None


def metrics_record(metrics: Metrics, params: dict) -> dict:
    return {
        "mitigation_rate": metrics.mitigation_rate,
        "false_alarm_rate": metrics.false_alarm_rate,
        "n_attempts": metrics.n_attempts,
        "n_segments": metrics.n_segments,
        "params": dict(params),
        "per_segment_decisions": dict(metrics.per_segment_decisions),
        "runtime": metrics.runtime,
    }


def write_metrics(records, path) -> Path:
    """Write one metrics record, or a list of them for a sweep."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(records, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _check_rate(value, key, path):
    if value is None:
        return
    if not isinstance(value, (int, float)) or not 0.0 <= value <= 1.0:
        raise FileFormatError(f"{path}: {key} must be null or a fraction in [0, 1], got {value!r}")


def read_metrics(path) -> list:
    """Metrics records in a file, always as a list."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON: {exc}") from None
    records = data if isinstance(data, list) else [data]
    for record in records:
        if not isinstance(record, dict) or any(k not in record for k in METRICS_KEYS):
            raise FileFormatError(f"{path}: metrics record must hold keys {', '.join(METRICS_KEYS)}")
        if not isinstance(record["params"], dict):
            raise FileFormatError(f"{path}: params must be an object")
        for key in ("mitigation_rate", "false_alarm_rate"):
            _check_rate(record[key], key, path)
    return records


def write_event_log(entries: Sequence[LogEntry], path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(LOG_HEADER + "\n")
        for entry in entries:
            fh.write(entry.to_csv() + "\n")
    return path


def read_event_log(path) -> list:
    path = Path(path)
    entries = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or ",".join(header) != LOG_HEADER:
            raise FileFormatError(f"{path}: line 1: expected header {LOG_HEADER!r}")
        for row in reader:
            if len(row) != 7:
                raise FileFormatError(f"{path}: line {reader.line_num}: expected 7 fields, got {len(row)}")
            try:
                rss = float(row[5]) if row[5] else float("nan")
                entries.append(LogEntry(float(row[0]), row[1], row[2], row[3], row[4], rss, row[6]))
            except ValueError as exc:
                raise FileFormatError(f"{path}: line {reader.line_num}: {exc}") from None
    return entries
