"""Synthetic RSS traces for on-body and off-body radio links.

On-body links follow the two-path creeping wave model: a clockwise wave of
path length ``d`` and an anti-clockwise wave of length ``2*pi*r - d``
interfere at the receiver, each attenuated by a surface loss factor ``W``.
Static bodies leave only receiver noise on top of that baseline; body motion
adds a band-limited modulation.

Off-body links follow log-distance path loss plus temporally correlated
lognormal shadowing and Rician/Rayleigh small-scale fading whose strength
and Doppler spread depend on how busy the environment is.

All randomness comes from ``numpy.random.Generator`` instances seeded from
the link specification, so a trace is a pure function of its ``LinkSpec``.

Examples
--------
>>> link = LinkSpec(kind=LinkKind.ON_BODY, duration=120.0, sample_period=0.2)
>>> trace = generate_trace(link)
>>> len(trace)
600
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import signal

from .errors import DomainError, EmptyTraceError

SPEED_OF_LIGHT = 299_792_458.0
VACUUM_IMPEDANCE = 376.73

# internal simulation grid; RSS is an instantaneous reading so the slower
# output rate is obtained by plain decimation (no anti-alias filter)
_FINE_RATE_HZ = 20.0


class LinkKind(str, enum.Enum):
    ON_BODY = "onbody"
    OFF_BODY = "offbody"


class MotionState(str, enum.Enum):
    STATIC = "static"
    WALKING = "walking"
    GESTURING = "gesturing"


class EnvDynamics(str, enum.Enum):
    CALM = "calm"
    MODERATE = "moderate"
    BUSY = "busy"


@dataclass(frozen=True)
class EnvParams:
    """Channel statistics for one environment dynamics level."""

    shadow_std: float  # dB
    shadow_tau: float  # s, correlation time of the shadowing process
    doppler: float  # Hz, std of the Gaussian Doppler spectrum
    rician_k: float  # linear K-factor, 0 gives Rayleigh


ENV_PARAMS = {
    EnvDynamics.CALM: EnvParams(shadow_std=2.8, shadow_tau=6.0, doppler=0.4, rician_k=3.0),
    EnvDynamics.MODERATE: EnvParams(shadow_std=3.0, shadow_tau=4.0, doppler=1.0, rician_k=2.0),
    EnvDynamics.BUSY: EnvParams(shadow_std=4.0, shadow_tau=3.0, doppler=2.0, rician_k=0.0),
}

# shadowing added to off-body links while either wearer moves
BODY_BLOCKAGE_STD = 3.0  # dB
BODY_BLOCKAGE_TAU = 2.0  # s

DEFAULT_BANDS = {
    MotionState.STATIC: (0.3, 4.5),
    MotionState.WALKING: (0.6, 1.2),
    MotionState.GESTURING: (0.5, 2.0),
}

DEFAULT_DEPTHS = {
    MotionState.STATIC: 0.0,
    MotionState.WALKING: 27.0,
    MotionState.GESTURING: 18.0,
}


@dataclass(frozen=True)
class RadioConfig:
    """Transmitter parameters.

    Attributes
    ----------
    transmit_power : float
        Watts.
    antenna_gain : float
        Linear, dimensionless.
    frequency : float
        Carrier frequency in Hz.
    wave_impedance : float
        Vacuum wave impedance in ohms.
    dbm_offset : float
        Constant added to ``20*log10|E|`` to express field strength as a
        receiver reading in dBm. Only variations matter downstream.
    """

    transmit_power: float = 1e-3
    antenna_gain: float = 1.0
    frequency: float = 2.4e9
    wave_impedance: float = VACUUM_IMPEDANCE
    dbm_offset: float = -20.0

    def __post_init__(self):
        if not self.transmit_power > 0:
            raise DomainError(f"transmit_power must be > 0, got {self.transmit_power}")
        if not self.antenna_gain > 0:
            raise DomainError(f"antenna_gain must be > 0, got {self.antenna_gain}")
        if not 2.0e9 <= self.frequency <= 6.0e9:
            raise DomainError(f"frequency must lie in [2 GHz, 6 GHz], got {self.frequency}")

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi * self.frequency / SPEED_OF_LIGHT

    @property
    def transmit_power_dbm(self) -> float:
        return 10.0 * math.log10(self.transmit_power / 1e-3)


@dataclass(frozen=True)
class BodyGeometry:
    """Cross-section of the body carrying both antennas.

    ``arc_distance`` is measured along the body surface; heights are the
    antenna stand-off distances from the skin.
    """

    body_radius: float = 0.15
    arc_distance: float = 0.3
    antenna_height_tx: float = 0.005
    antenna_height_rx: float = 0.005
    tissue_permittivity: complex = 38.0 - 11.0j

    def __post_init__(self):
        if not 0.05 <= self.body_radius <= 0.5:
            raise DomainError(f"body_radius must lie in [0.05, 0.5] m, got {self.body_radius}")
        if self.antenna_height_tx < 0 or self.antenna_height_rx < 0:
            raise DomainError("antenna heights must be >= 0")
        _check_arc(self.arc_distance, self.body_radius)

    @property
    def circumference(self) -> float:
        return 2.0 * math.pi * self.body_radius


def _check_arc(arc_distance, body_radius):
    if not 0 < arc_distance < 2.0 * math.pi * body_radius:
        raise DomainError(
            f"arc_distance must lie in (0, 2*pi*r) = (0, {2 * math.pi * body_radius:.4f}), "
            f"got {arc_distance}")


@dataclass(frozen=True)
class MotionProcess:
    """Body motion of the wearer.

    ``dominant_band`` and ``modulation_depth`` default per state. The depth is
    the nominal peak-to-peak excursion in dB, taken as six standard
    deviations of the modulation.
    """

    state: MotionState = MotionState.STATIC
    dominant_band: Optional[tuple] = None
    modulation_depth: Optional[float] = None
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "state", MotionState(self.state))
        if self.dominant_band is None:
            object.__setattr__(self, "dominant_band", DEFAULT_BANDS[self.state])
        if self.modulation_depth is None:
            object.__setattr__(self, "modulation_depth", DEFAULT_DEPTHS[self.state])
        lo, hi = self.dominant_band
        if self.state is not MotionState.STATIC and not 0.3 <= lo < hi <= 4.5:
            raise DomainError(f"dominant_band must lie inside [0.3, 4.5] Hz, got {self.dominant_band}")
        if self.modulation_depth < 0:
            raise DomainError("modulation_depth must be >= 0")


def constant_distance(distance: float) -> tuple:
    """Distance track for a link whose end points do not move."""
    return ((0.0, float(distance)),)


@dataclass(frozen=True)
class LinkSpec:
    """Everything needed to synthesize one RSS trace.

    ``distance_track`` holds ``(time_s, distance_m)`` knots, linearly
    interpolated and held constant outside the knot range. It is ignored for
    on-body links, and ``geometry`` is ignored for off-body links.
    """

    kind: LinkKind = LinkKind.ON_BODY
    radio: RadioConfig = field(default_factory=RadioConfig)
    geometry: BodyGeometry = field(default_factory=BodyGeometry)
    distance_track: tuple = constant_distance(2.0)
    env_dynamics: EnvDynamics = EnvDynamics.CALM
    motion: MotionProcess = field(default_factory=MotionProcess)
    sample_period: float = 0.2
    duration: float = 120.0
    noise_std: float = 2.0
    rng_seed: int = 0
    link_id: str = "link"
    path_loss_exponent: float = 2.2

    def __post_init__(self):
        object.__setattr__(self, "kind", LinkKind(self.kind))
        object.__setattr__(self, "env_dynamics", EnvDynamics(self.env_dynamics))
        if not 0.05 <= self.sample_period <= 1.0:
            raise DomainError(f"sample_period must lie in [0.05, 1.0] s, got {self.sample_period}")
        if self.noise_std < 0:
            raise DomainError("noise_std must be >= 0")
        if any(d <= 0 for _, d in self.distance_track):
            raise DomainError("distances in distance_track must be > 0")


@dataclass(frozen=True, eq=False)
class RssTrace:
    """Uniformly sampled RSS readings of one link."""

    timestamps: np.ndarray
    values: np.ndarray
    link_id: str = "link"

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=float)
        v = np.asarray(self.values)
        if t.shape != v.shape or t.ndim != 1:
            raise DomainError("timestamps and values must be 1-D and of equal length")
        if len(t) > 1:
            dt = np.diff(t)
            if np.any(dt <= 0):
                raise DomainError("timestamps must be strictly increasing")
            if np.ptp(dt) > 1e-9:
                raise DomainError("timestamps must be uniformly spaced")
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, RssTrace):
            return NotImplemented
        return (self.link_id == other.link_id
                and np.array_equal(self.timestamps, other.timestamps)
                and np.array_equal(self.values, other.values))

    @property
    def sample_period(self) -> float:
        if len(self.timestamps) < 2:
            raise DomainError("sample period is undefined for fewer than two samples")
        return float(self.timestamps[1] - self.timestamps[0])

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.sample_period


AttenuationFn = Callable[[float, BodyGeometry], complex]


def attenuation_w(path: float, geometry: BodyGeometry, *, c_w: float = 0.37,
                  mu: float = 5.0, gamma: Optional[float] = None) -> complex:
    """Creeping wave loss factor along a surface path.

    ``exp(-gamma*path) * exp(-mu*(h_t + h_r))`` with
    ``gamma = c_w*sqrt(|eps|)/r`` unless ``gamma`` (Np/m) is given. The
    default ``c_w`` puts roughly 40 dB of excess loss on a 0.3 m path around
    a 0.15 m radius torso.
    """
    if not path > 0:
        raise DomainError(f"path must be > 0, got {path}")
    if gamma is None:
        gamma = c_w * math.sqrt(abs(geometry.tissue_permittivity)) / geometry.body_radius
    heights = geometry.antenna_height_tx + geometry.antenna_height_rx
    return complex(math.exp(-gamma * path - mu * heights))


def creeping_field(radio: RadioConfig, geometry: BodyGeometry,
                   attenuation: AttenuationFn = attenuation_w) -> complex:
    """Complex electric field (V/m) at the receiver of an on-body link.

    Sum of the clockwise wave (path ``d``) and the anti-clockwise wave (path
    ``2*pi*r - d``).
    """
    _check_arc(geometry.arc_distance, geometry.body_radius)
    scale = math.sqrt(radio.wave_impedance / (2.0 * math.pi)) * math.sqrt(
        radio.transmit_power * radio.antenna_gain)
    k = radio.wavenumber
    field_sum = 0j
    for path in (geometry.arc_distance, geometry.circumference - geometry.arc_distance):
        field_sum += scale / path * np.exp(-1j * k * path) * attenuation(path, geometry)
    return complex(field_sum)


def onbody_baseline_dbm(radio: RadioConfig, geometry: BodyGeometry,
                        attenuation: AttenuationFn = attenuation_w) -> float:
    """Static on-body RSS level in dBm."""
    magnitude = abs(creeping_field(radio, geometry, attenuation))
    return 20.0 * math.log10(max(magnitude, 1e-300)) + radio.dbm_offset


def offbody_path_loss_db(distance, frequency: float, exponent: float = 2.2):
    """Log-distance path loss with a free-space 1 m reference."""
    distance = np.asarray(distance, dtype=float)
    pl_ref = 20.0 * np.log10(4.0 * np.pi * frequency / SPEED_OF_LIGHT)
    return pl_ref + 10.0 * exponent * np.log10(distance)


def _bandlimited(rng, n, rate, band):
    """Unit-variance Gaussian process confined to ``band`` Hz."""
    white = rng.standard_normal(n)
    spec = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, d=1.0 / rate)
    spec[(freqs < band[0]) | (freqs > band[1])] = 0.0
    out = np.fft.irfft(spec, n)
    std = out.std()
    return out / std if std > 0 else out


def _shadowing(rng, n, rate, std, tau):
    """First-order Gauss-Markov shadowing in dB."""
    rho = math.exp(-1.0 / (rate * tau))
    drive = rng.standard_normal(n) * std * math.sqrt(1.0 - rho * rho)
    drive[0] = rng.standard_normal() * std
    return signal.lfilter([1.0], [1.0, -rho], drive)


def _fading_db(rng, n, rate, doppler, k_factor):
    """Rician envelope in dB with a Gaussian Doppler spectrum."""
    g = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    freqs = np.fft.fftfreq(n, d=1.0 / rate)
    g = np.fft.ifft(np.fft.fft(g) * np.exp(-0.25 * (freqs / doppler) ** 2))
    g /= math.sqrt(np.mean(np.abs(g) ** 2))
    los = math.sqrt(k_factor / (k_factor + 1.0)) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    h = los + math.sqrt(1.0 / (k_factor + 1.0)) * g
    return 20.0 * np.log10(np.maximum(np.abs(h), 1e-6))


def _fine_grid(sample_period):
    step = max(1, math.ceil(sample_period * _FINE_RATE_HZ))
    return step, step / sample_period


def generate_trace(link: LinkSpec) -> RssTrace:
    """Synthesize the RSS trace of ``link``, quantized to whole dBm."""
    n = int(math.floor(link.duration / link.sample_period + 1e-9))
    if n < 1:
        raise EmptyTraceError(
            f"duration {link.duration} s is shorter than one sample period {link.sample_period} s")
    step, rate = _fine_grid(link.sample_period)
    n_fine = n * step
    t_fine = np.arange(n_fine) / rate
    rng = np.random.default_rng([link.rng_seed, link.motion.rng_seed, 0x5EC7A6])
    motion = link.motion

    if link.kind is LinkKind.ON_BODY:
        level = np.full(n_fine, onbody_baseline_dbm(link.radio, link.geometry))
        if motion.state is not MotionState.STATIC and motion.modulation_depth > 0:
            level += motion.modulation_depth / 6.0 * _bandlimited(
                rng, n_fine, rate, motion.dominant_band)
    else:
        env = ENV_PARAMS[link.env_dynamics]
        knots = np.asarray(link.distance_track, dtype=float).reshape(-1, 2)
        distance = np.interp(t_fine, knots[:, 0], knots[:, 1])
        doppler = env.doppler
        if motion.state is not MotionState.STATIC:
            # walkers sway relative to each other, block the path with their
            # bodies and stir up the multipath
            distance = distance * (1.0 + 0.2 * _bandlimited(rng, n_fine, rate, (0.05, 0.3)))
            distance = np.maximum(distance, 0.1)
            doppler = max(doppler, 3.0)
            blockage = _shadowing(rng, n_fine, rate, BODY_BLOCKAGE_STD, BODY_BLOCKAGE_TAU)
        else:
            blockage = 0.0
        level = (link.radio.transmit_power_dbm
                 + 10.0 * math.log10(link.radio.antenna_gain)
                 - offbody_path_loss_db(distance, link.radio.frequency, link.path_loss_exponent)
                 + _shadowing(rng, n_fine, rate, env.shadow_std, env.shadow_tau)
                 + _fading_db(rng, n_fine, rate, doppler, env.rician_k)
                 + blockage)
        if motion.state is not MotionState.STATIC and motion.modulation_depth > 0:
            # the wearer's own body barely matters off-body
            level += 0.1 * motion.modulation_depth / 6.0 * _bandlimited(
                rng, n_fine, rate, motion.dominant_band)

    sampled = level[::step]
    sampled = sampled + link.noise_std * rng.standard_normal(n)
    timestamps = np.arange(n) * link.sample_period
    return RssTrace(timestamps, np.rint(sampled).astype(np.int64), link.link_id)


def concatenate(traces: Sequence[RssTrace], link_id: Optional[str] = None) -> RssTrace:
    """Join traces sharing a sample period back to back."""
    if not traces:
        raise EmptyTraceError("nothing to concatenate")
    period = traces[0].sample_period
    values = np.concatenate([tr.values for tr in traces])
    return RssTrace(np.arange(len(values)) * period, values,
                    link_id if link_id is not None else traces[0].link_id)
