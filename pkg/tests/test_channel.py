import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from securetag.channel import (BodyGeometry, EnvDynamics, LinkKind, LinkSpec, MotionProcess,
                               MotionState, RadioConfig, RssTrace, attenuation_w,
                               concatenate, constant_distance, creeping_field,
                               generate_trace, offbody_path_loss_db, onbody_baseline_dbm)
from securetag.errors import DomainError, EmptyTraceError

mpmath.mp.dps = 40


def field_oracle(power, gain, freq, r, d, h_t, h_r, eps, eta=376.73, c_w=0.37, mu=5.0):
    """Term-by-term high precision evaluation of the two-path creeping field."""
    mpf = mpmath.mpf
    r, d = mpf(r), mpf(d)
    k = 2 * mpmath.pi * mpf(freq) / mpf(299792458)
    gamma = mpf(c_w) * mpmath.sqrt(abs(mpmath.mpc(eps.real, eps.imag))) / r
    total = mpmath.mpc(0)
    for path in (d, 2 * mpmath.pi * r - d):
        w = mpmath.exp(-gamma * path - mpf(mu) * (mpf(h_t) + mpf(h_r)))
        total += (mpmath.sqrt(mpf(eta) / (2 * mpmath.pi)) * mpmath.sqrt(mpf(power) * mpf(gain))
                  / path * mpmath.exp(-1j * k * path) * w)
    return complex(total)


def test_creeping_field_defaults_match_oracle():
    got = creeping_field(RadioConfig(), BodyGeometry())
    want = field_oracle(1e-3, 1.0, 2.4e9, 0.15, 0.3, 0.005, 0.005, 38 - 11j)
    assert abs(got - want) <= 1e-12 * abs(want)


@settings(max_examples=200, deadline=None)
@given(power=st.floats(1e-6, 1e-1), gain=st.floats(0.1, 10), freq=st.floats(2e9, 6e9),
       r=st.floats(0.05, 0.5), frac=st.floats(0.01, 0.99),
       h=st.tuples(st.floats(0, 0.02), st.floats(0, 0.02)))
def test_creeping_field_matches_oracle(power, gain, freq, r, frac, h):
    d = frac * 2 * math.pi * r
    geometry = BodyGeometry(body_radius=r, arc_distance=d, antenna_height_tx=h[0],
                            antenna_height_rx=h[1])
    got = creeping_field(RadioConfig(transmit_power=power, antenna_gain=gain, frequency=freq),
                         geometry)
    want = field_oracle(power, gain, freq, r, d, h[0], h[1], 38 - 11j)
    assert abs(got - want) <= 1e-12 * abs(want)


def test_baseline_frozen_value():
    # derived from the mpmath oracle at default geometry and radio
    assert onbody_baseline_dbm(RadioConfig(), BodyGeometry()) == pytest.approx(
        -62.62652058305572, abs=1e-9)


def test_symmetric_arc_gives_equal_paths():
    g = BodyGeometry(arc_distance=math.pi * 0.15)
    e = creeping_field(RadioConfig(), g)
    single = field_oracle(1e-3, 1, 2.4e9, 0.15, math.pi * 0.15, 0.005, 0.005, 38 - 11j) / 2
    assert e == pytest.approx(2 * single, rel=1e-12)


def test_pluggable_attenuation():
    flat = creeping_field(RadioConfig(), BodyGeometry(), attenuation=lambda p, g: 1.0)
    lossy = creeping_field(RadioConfig(), BodyGeometry())
    assert abs(flat) > abs(lossy)
    assert attenuation_w(0.3, BodyGeometry(), gamma=0.0, mu=0.0) == 1.0


@pytest.mark.parametrize("kwargs", [
    dict(arc_distance=0.0), dict(arc_distance=2 * math.pi * 0.15), dict(body_radius=0.01),
    dict(antenna_height_tx=-0.001)])
def test_geometry_domain(kwargs):
    with pytest.raises(DomainError):
        BodyGeometry(**kwargs)


@pytest.mark.parametrize("freq", [1.9e9, 6.1e9])
def test_frequency_domain(freq):
    with pytest.raises(DomainError):
        RadioConfig(frequency=freq)


@pytest.mark.parametrize("period", [0.01, 1.5])
def test_sample_period_domain(period):
    with pytest.raises(DomainError):
        LinkSpec(sample_period=period)


def test_empty_duration():
    with pytest.raises(EmptyTraceError):
        generate_trace(LinkSpec(duration=0.1, sample_period=0.2))


def test_trace_shape_and_quantization():
    tr = generate_trace(LinkSpec(duration=120, sample_period=0.2))
    assert len(tr) == 600
    assert tr.values.dtype == np.int64
    assert np.allclose(np.diff(tr.timestamps), 0.2)


@pytest.mark.parametrize("kind,env", [("onbody", "calm"), ("offbody", "busy")])
def test_trace_deterministic(kind, env):
    link = LinkSpec(kind=kind, env_dynamics=env, rng_seed=11,
                    motion=MotionProcess(MotionState.WALKING))
    assert generate_trace(link) == generate_trace(link)
    assert generate_trace(link) != generate_trace(LinkSpec(kind=kind, env_dynamics=env,
                                                            rng_seed=12))


def test_static_onbody_is_flat():
    stds = [generate_trace(LinkSpec(rng_seed=s)).values.std() for s in range(20)]
    assert max(stds) < 4.0


def test_walking_onbody_much_more_variable():
    walk = MotionProcess(MotionState.WALKING)
    ratios = [generate_trace(LinkSpec(rng_seed=s, motion=walk)).values.std()
              / generate_trace(LinkSpec(rng_seed=s)).values.std() for s in range(20)]
    assert 2.0 <= float(np.median(ratios)) <= 3.0


def test_busy_offbody_more_variable_than_static_onbody():
    off = generate_trace(LinkSpec(kind=LinkKind.OFF_BODY, env_dynamics=EnvDynamics.BUSY))
    on = generate_trace(LinkSpec())
    assert off.values.std() > on.values.std()


def test_offbody_level_follows_distance():
    near = generate_trace(LinkSpec(kind="offbody", distance_track=constant_distance(1.0)))
    far = generate_trace(LinkSpec(kind="offbody", distance_track=constant_distance(10.0)))
    assert near.values.mean() - far.values.mean() == pytest.approx(22.0, abs=3.0)


def test_path_loss_reference():
    assert offbody_path_loss_db(1.0, 2.4e9) == pytest.approx(40.05, abs=0.01)
    assert offbody_path_loss_db(10.0, 2.4e9, 2.0) - offbody_path_loss_db(1.0, 2.4e9, 2.0) \
        == pytest.approx(20.0)


def test_motion_band_domain():
    with pytest.raises(DomainError):
        MotionProcess(MotionState.WALKING, dominant_band=(0.1, 1.0))


def test_rss_trace_validation():
    with pytest.raises(DomainError):
        RssTrace(np.array([0.0, 0.2, 0.5]), np.array([1, 2, 3]))
    with pytest.raises(DomainError):
        RssTrace(np.array([0.0, 0.2]), np.array([1]))


def test_concatenate():
    a = generate_trace(LinkSpec(duration=10))
    b = generate_trace(LinkSpec(duration=10, rng_seed=1))
    c = concatenate([a, b])
    assert len(c) == len(a) + len(b)
    assert np.array_equal(c.values[len(a):], b.values)
    with pytest.raises(EmptyTraceError):
        concatenate([])


def test_attenuation_examples():
    g0 = BodyGeometry(antenna_height_tx=0.0, antenna_height_rx=0.0)
    assert abs(attenuation_w(0.1, g0, gamma=10.0)) == pytest.approx(math.exp(-1.0))
    assert abs(attenuation_w(1e-12, g0)) == pytest.approx(1.0)
    for d in (0.05, 0.2, 0.4):
        assert abs(attenuation_w(2 * d, g0)) <= abs(attenuation_w(d, g0)) ** 2 * (1 + 1e-12)
    with pytest.raises(DomainError):
        attenuation_w(0.0, g0)


def test_busy_more_variable_than_calm():
    from scipy.stats import binomtest
    wins = sum(
        generate_trace(LinkSpec(kind="offbody", env_dynamics="busy", rng_seed=s)).values.std()
        > generate_trace(LinkSpec(kind="offbody", env_dynamics="calm", rng_seed=s)).values.std()
        for s in range(50))
    assert binomtest(wins, 50, 0.5, alternative="greater").pvalue < 0.01


def test_static_onbody_std_all_seeds():
    link = LinkSpec(duration=120, sample_period=0.2)
    stds = [generate_trace(LinkSpec(rng_seed=s)).values.std() for s in range(50)]
    assert len(generate_trace(link)) == 600 and max(stds) < 4.0
