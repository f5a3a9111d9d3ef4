"""Acceptance suite: one test per headline criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured numbers and
runtime, then asserts both the criterion and its runtime budget.
"""
import time
from dataclasses import replace

import numpy as np
import pytest

from securetag.channel import (EnvDynamics, LinkKind, LinkSpec, MotionProcess, MotionState,
                               generate_trace)
from securetag.decomposition import (Segment, diagonal_average, dtw_distance, embed,
                                     fast_ica, scica, segment_trace)
from securetag.harness import ScenarioConfig, default_profile, run_batch
from securetag.matching import (CalibrationProfile, Label, PipelineConfig, classify_trace,
                                label_for, utility)
from securetag.protocol import AttackKind, AttackScript, safety_holds

from test_decomposition import brute_dtw

WALK = MotionProcess(MotionState.WALKING)


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail, runtime, budget):
        ok = ok and runtime < budget
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail} [{runtime:.1f}s < {budget:.0f}s]")
    return emit


def test_scica_round_trip(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(200):
        n = int(rng.integers(50, 201))
        rate = float(rng.choice([10 / 3, 5.0, 10.0]))
        if i % 2:
            x = rng.normal(-60, 3, n).round()
        else:
            walk = MotionProcess(MotionState.WALKING) if i % 4 else MotionProcess()
            x = generate_trace(LinkSpec(duration=n / rate + 1, sample_period=1 / rate,
                                        motion=walk, rng_seed=i)).values[:n]
        comps = scica(Segment(x, rate), seed=i)
        worst = max(worst, float(np.max(np.abs(comps.reconstruction() + comps.mean - x))))
    runtime = time.perf_counter() - t0
    report("SCICA round trip", worst <= 1e-8, f"max error {worst:.2e} over 200 segments",
           runtime, 30)
    assert worst <= 1e-8 and runtime < 30


def test_embedding_inverse(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    failures = 0
    for T in range(4, 201):
        x = rng.normal(size=T) * 20
        for L in range(1, T):
            failures += not np.array_equal(diagonal_average(embed(x, L)), x)
    runtime = time.perf_counter() - t0
    report("embedding inverse", failures == 0, f"{failures} inexact (T, L) pairs", runtime, 5)
    assert failures == 0 and runtime < 5


def test_dtw_oracle(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    mismatches = 0
    for _ in range(500):
        a = rng.normal(size=rng.integers(1, 7))
        b = rng.normal(size=rng.integers(1, 7))
        mismatches += dtw_distance(a, b) != brute_dtw(a, b)
    runtime = time.perf_counter() - t0
    report("DTW oracle", mismatches == 0, f"{mismatches}/500 mismatches", runtime, 10)
    assert mismatches == 0 and runtime < 10


def _recovery(kind, seed):
    rng = np.random.default_rng(seed)
    t = np.linspace(0, 10, 1000)
    s1 = np.sin(2 * np.pi * rng.uniform(0.3, 1.5) * t + rng.uniform(0, np.pi))
    if kind == "ramp":
        s2 = t - t.mean()
    else:
        s2 = np.sign(np.sin(2 * np.pi * rng.uniform(0.1, 0.4) * t + rng.uniform(0, np.pi)))
    s = np.vstack([s1, s2])
    mix = rng.normal(size=(2, 2))
    while abs(np.linalg.det(mix)) < 0.2:
        mix = rng.normal(size=(2, 2))
    x = mix @ s
    x -= x.mean(axis=1, keepdims=True)
    unmixing, _ = fast_ica(x, seed)
    c = np.abs(np.corrcoef(np.vstack([unmixing @ x, s]))[:2, 2:])
    # best permutation, then the weaker of the two matched correlations
    return max(min(c[0, 0], c[1, 1]), min(c[0, 1], c[1, 0]))


def test_fastica_recovery(report):
    t0 = time.perf_counter()
    scores = [_recovery(kind, seed) for kind in ("ramp", "square") for seed in range(20)]
    runtime = time.perf_counter() - t0
    worst = min(scores)
    report("FastICA source recovery", worst >= 0.95, f"min |corr| {worst:.4f} over 40 mixtures",
           runtime, 30)
    assert worst >= 0.95 and runtime < 30


def test_channel_targets(report):
    t0 = time.perf_counter()
    static, ratios = [], []
    for seed in range(50):
        s = generate_trace(LinkSpec(rng_seed=seed)).values.std()
        w = generate_trace(LinkSpec(rng_seed=seed, motion=replace(WALK, rng_seed=seed))).values.std()
        static.append(s)
        ratios.append(w / s)
    runtime = time.perf_counter() - t0
    med = float(np.median(ratios))
    ok = max(static) < 4.0 and 2.0 <= med <= 3.0
    report("channel calibration targets", ok,
           f"max static std {max(static):.2f} dB, median walking/static {med:.2f}", runtime, 20)
    assert max(static) < 4.0 and 2.0 <= med <= 3.0 and runtime < 20


def test_end_to_end_detection(report):
    t0 = time.perf_counter()
    default_profile.cache_clear()
    profile = default_profile(0.2, PipelineConfig(), seed=0)
    conditions = {
        "onbody-static": dict(kind=LinkKind.ON_BODY),
        "onbody-walking": dict(kind=LinkKind.ON_BODY, motion=WALK),
        "offbody-calm": dict(kind=LinkKind.OFF_BODY, env_dynamics=EnvDynamics.CALM),
        "offbody-busy": dict(kind=LinkKind.OFF_BODY, env_dynamics=EnvDynamics.BUSY),
    }
    offbody_rate = {}
    for i, (name, kw) in enumerate(conditions.items()):
        trace = generate_trace(LinkSpec(duration=100 * 20, rng_seed=900 + i, **kw))
        labels = [d.label for d in classify_trace(trace, profile)]
        assert len(labels) == 100
        offbody_rate[name] = np.mean([lab is Label.OFF_BODY for lab in labels])
    detection = (offbody_rate["offbody-calm"] + offbody_rate["offbody-busy"]) / 2
    false_alarm = (offbody_rate["onbody-static"] + offbody_rate["onbody-walking"]) / 2
    runtime = time.perf_counter() - t0
    ok = detection >= 0.90 and false_alarm <= 0.10
    per = ", ".join(f"{k} {v:.2f}" for k, v in offbody_rate.items())
    report("end-to-end detection", ok,
           f"detection {detection:.3f}, false alarms {false_alarm:.3f} ({per})", runtime, 180)
    assert detection >= 0.90 and false_alarm <= 0.10 and runtime < 180


def test_protocol_mitigation(report):
    t0 = time.perf_counter()
    profile = default_profile()
    tag = LinkSpec(kind=LinkKind.ON_BODY, link_id="tag")
    busy = LinkSpec(kind=LinkKind.OFF_BODY, env_dynamics=EnvDynamics.BUSY, link_id="intruder")
    seeds = tuple(range(100))
    counts, safe = {}, True
    for kind in [None, *AttackKind]:
        cfg = ScenarioConfig("acceptance", (tag, busy), AttackScript(kind, busy) if kind else None,
                             seeds=seeds, device="tag")
        outcomes, _ = run_batch(cfg, profile)
        safe &= all(safety_holds(o.event_log) for o in outcomes)
        if kind is None:
            counts["benign"] = sum(o.associated for o in outcomes)
        else:
            counts[kind.value] = sum(all(o.attempts) for o in outcomes)
    runtime = time.perf_counter() - t0
    ok = all(c >= 95 for c in counts.values()) and safe
    report("protocol mitigation", ok,
           ", ".join(f"{k} {v}/100" for k, v in counts.items()) + f", safety {'100%' if safe else 'VIOLATED'}",
           runtime, 120)
    assert ok and runtime < 120


def test_decision_boundary(report):
    t0 = time.perf_counter()
    p = CalibrationProfile(1.0, 1.0, 3.0, 2.0, 0.25, 0.75, 1.75)
    boundary_ok = label_for(p.threshold, p) is Label.OFF_BODY
    rng = np.random.default_rng(3)
    flips = 0
    for _ in range(1000):
        means = rng.uniform(0.05, 10.0, 4)
        sig = rng.uniform(0.0, 12.0, 2)
        c = rng.uniform(1e-3, 1e3)
        a = CalibrationProfile.from_means(*means)
        b = CalibrationProfile.from_means(*(c * means))
        flips += label_for(utility(*sig, a), a) is not label_for(utility(*(c * sig), b), b)
    runtime = time.perf_counter() - t0
    ok = boundary_ok and flips == 0
    report("decision boundary", ok,
           f"u == threshold -> {label_for(p.threshold, p).value}, {flips}/1000 flips under scaling",
           runtime, 5)
    assert ok and runtime < 5


def test_sample_period_sweep(report):
    t0 = time.perf_counter()
    tag = LinkSpec(kind=LinkKind.ON_BODY, link_id="tag")
    calm = LinkSpec(kind=LinkKind.OFF_BODY, env_dynamics=EnvDynamics.CALM, link_id="intruder")
    base = ScenarioConfig("sweep", (tag, calm),
                          AttackScript(AttackKind.AUTHENTICATED_SPOOFING, calm),
                          seeds=tuple(range(100)), device="tag")
    rates = {}
    for period in (0.2, 0.5):
        cfg = replace(base, sample_period=period)
        _, metrics = run_batch(cfg, default_profile(period, cfg.pipeline))
        rates[period] = metrics.mitigation_rate
    runtime = time.perf_counter() - t0
    ok = rates[0.5] < rates[0.2]
    report("sample-period sweep", ok,
           f"mitigation {rates[0.2]:.2f} at 200 ms vs {rates[0.5]:.2f} at 500 ms", runtime, 180)
    assert ok and runtime < 180
