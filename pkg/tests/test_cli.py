import csv
import io as stdio
import json
from pathlib import Path

import pytest

from securetag import io
from securetag.cli import (EXIT_CONFIG, EXIT_DEGENERATE, EXIT_IO, EXIT_OK, EXIT_PRECONDITION,
                           main)
from securetag.harness import calibration_traces

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture(scope="module")
def calib_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("calib")
    on, off = calibration_traces()
    paths = {"on": [], "off": []}
    for label, traces in (("on", on), ("off", off)):
        for i, tr in enumerate(traces):
            paths[label].append(str(io.write_trace(tr, d / f"{label}{i}.csv")))
    return paths


def test_simulate_naming_and_determinism(tmp_path):
    args = ["simulate", "--config", str(CONFIGS / "s1.ini"), "--seed", "4"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == ["s1_intruder_4.csv", "s1_tag_4.csv"]
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()


def test_simulate_zero_seeds(tmp_path, caplog):
    cfg = tmp_path / "z.ini"
    cfg.write_text("[scenario]\nseeds =\n[link:tag]\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    assert list((tmp_path / "o").iterdir()) == []
    assert "no seeds" in caplog.text


def test_simulate_unwritable_out(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code = main(["simulate", "--config", str(CONFIGS / "s1.ini"), "--seed", "0",
                 "--out", str(blocker / "sub")])
    assert code == EXIT_IO


def test_calibrate_and_classify(tmp_path, calib_files, capsys):
    prof = tmp_path / "profile.ini"
    assert main(["calibrate", "--on", *calib_files["on"], "--off", *calib_files["off"],
                 "--out", str(prof)]) == EXIT_OK
    p = io.read_profile(prof)
    assert p.alpha > p.beta
    main(["simulate", "--config", str(CONFIGS / "s1.ini"), "--seed", "2", "--out", str(tmp_path)])
    capsys.readouterr()
    assert main(["classify", str(tmp_path / "s1_tag_2.csv"), "--profile", str(prof)]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 6
    assert sum(line.split()[5] == "onbody" for line in lines) >= 5
    assert main(["classify", str(tmp_path / "s1_tag_2.csv"), "--profile", str(prof), "--json"]) == EXIT_OK
    rows = json.loads(capsys.readouterr().out)
    assert len(rows) == 6 and set(rows[0]) == {"index", "sigma_large", "sigma_small", "utility",
                                               "threshold", "label", "degenerate"}


def test_calibrate_swapped_classes(tmp_path, calib_files):
    a, b = tmp_path / "a.ini", tmp_path / "b.ini"
    main(["calibrate", "--on", *calib_files["on"], "--off", *calib_files["off"], "--out", str(a)])
    main(["calibrate", "--on", *calib_files["off"], "--off", *calib_files["on"], "--out", str(b)])
    pa, pb = io.read_profile(a), io.read_profile(b)
    assert (pa.alpha, pa.beta) == (pb.alpha, pb.beta)


def test_calibrate_empty_file(tmp_path, calib_files):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    code = main(["calibrate", "--on", str(empty), "--off", *calib_files["off"],
                 "--out", str(tmp_path / "p.ini")])
    assert code == EXIT_PRECONDITION


def test_calibrate_degenerate(tmp_path, calib_files):
    files = calib_files["on"]
    code = main(["calibrate", "--on", *files, "--off", *files, "--out", str(tmp_path / "p.ini")])
    assert code == EXIT_DEGENERATE


def test_classify_malformed(tmp_path, capsys, caplog):
    bad = tmp_path / "bad.csv"
    bad.write_text("t_s,rss_dbm\n0.0,-60\nfoo,bar\n")
    prof = io.write_profile(io.CalibrationProfile.from_means(0.5, 1.9, 2.5, 2.9), tmp_path / "p.ini")
    assert main(["classify", str(bad), "--profile", str(prof)]) == EXIT_CONFIG
    assert "line 3" in caplog.text


def test_attack_sim_and_report(tmp_path, capsys):
    out = tmp_path / "res"
    assert main(["attack-sim", "--config", str(CONFIGS / "s4.ini"), "--seed", "1",
                 "--out", str(out)]) == EXIT_OK
    rec = json.loads((out / "s4_metrics.json").read_text())
    assert rec["mitigation_rate"] is not None and rec["false_alarm_rate"] is not None
    assert (out / "s4_1_events.csv").read_text().startswith("t_s,origin,receiver")
    assert main(["attack-sim", "--config", str(CONFIGS / "benign.ini"), "--seed", "0",
                 "--out", str(out)]) == EXIT_OK
    rec = json.loads((out / "benign_metrics.json").read_text())
    assert rec["mitigation_rate"] is None and rec["false_alarm_rate"] is not None
    capsys.readouterr()
    assert main(["report", str(out / "s4_metrics.json"), str(out / "benign_metrics.json")]) == EXIT_OK
    rows = list(csv.reader(stdio.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["scenario", "parameter", "rate_type", "value"]
    assert len(rows) == 5


def test_report_sweep_rows(tmp_path, capsys):
    paths = []
    for name in ("a", "b", "c"):
        recs = [{"mitigation_rate": 0.9, "false_alarm_rate": 0.05, "n_attempts": 1,
                 "n_segments": 1, "params": {"scenario": name, "sweep": "sample_period",
                                             "value": sp}}
                for sp in (0.1, 0.2, 0.3, 0.4, 0.5)]
        paths.append(str(io.write_metrics(recs, tmp_path / f"{name}.json")))
    out = tmp_path / "table.csv"
    assert main(["report", *paths, "--out", str(out)]) == EXIT_OK
    rows = list(csv.reader(out.open()))[1:]
    assert len(rows) == 30
    assert all(0.0 <= float(r[3]) <= 1.0 for r in rows)


def test_report_errors(tmp_path, caplog):
    assert main(["report"]) == EXIT_CONFIG
    bad = tmp_path / "oops.json"
    bad.write_text("{}")
    assert main(["report", str(bad)]) == EXIT_CONFIG
    assert "oops.json" in caplog.text


def test_attack_sim_bad_topology(tmp_path):
    cfg = tmp_path / "t.ini"
    cfg.write_text("[scenario]\ndevice = a\n[link:a]\nkind = offbody\n")
    assert main(["attack-sim", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
