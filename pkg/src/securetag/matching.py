"""Propagation pattern matching: on-body versus off-body decisions.

Large-scale variations are low-pass filtered to strip body motion, the
standard deviations of the residual large-scale and the small-scale
variations are combined into a weighted utility, and the utility is compared
with a threshold learned from labelled calibration traces.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import RssTrace
from .decomposition import (DEFAULT_BAND, DEFAULT_ENERGY_RATIO, DEFAULT_LOWEST_FREQ,
                            Segment, decompose, segment_trace)
from .errors import CalibrationDegenerate, DomainError, SilentSegment

logger = logging.getLogger(__name__)

PROFILE_FIELDS = ("mean_std_large_on", "mean_std_small_on", "mean_std_large_off",
                  "mean_std_small_off", "alpha", "beta", "threshold")


class Label(str, enum.Enum):
    ON_BODY = "onbody"
    OFF_BODY = "offbody"


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs shared by calibration and classification."""

    segment_interval: float = 20.0
    lowest_freq: float = DEFAULT_LOWEST_FREQ
    energy_ratio: float = DEFAULT_ENERGY_RATIO
    cutoff: float = 0.5
    band: tuple = DEFAULT_BAND
    seed: int = 0


@dataclass(frozen=True)
class CalibrationProfile:
    mean_std_large_on: float
    mean_std_small_on: float
    mean_std_large_off: float
    mean_std_small_off: float
    alpha: float
    beta: float
    threshold: float

    @classmethod
    def from_means(cls, large_on, small_on, large_off, small_off):
        """Weights proportional to the class separation of each feature.

        ``alpha/beta = |dl| / |ds|`` normalized so ``alpha + beta = 1``; the
        threshold sits at the weighted midpoint of the two class means.
        """
        dl = abs(large_on - large_off)
        ds = abs(small_on - small_off)
        if dl < 1e-9 and ds < 1e-9:
            raise CalibrationDegenerate(
                "on-body and off-body traces have indistinguishable variation statistics")
        alpha = dl / (dl + ds)
        beta = ds / (dl + ds)
        threshold = alpha * (large_on + large_off) / 2 + beta * (small_on + small_off) / 2
        return cls(float(large_on), float(small_on), float(large_off), float(small_off),
                   float(alpha), float(beta), float(threshold))

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in PROFILE_FIELDS}


@dataclass(frozen=True)
class Decision:
    label: Label
    utility: float
    sigma_large: float
    sigma_small: float
    degenerate: bool = False


def remove_motion(large_scale, f_s: float, cutoff: float = 0.5) -> np.ndarray:
    """Ideal FFT low-pass keeping ``|f| <= cutoff``.

    Series shorter than 4 samples are returned unchanged.
    """
    x = np.asarray(large_scale, dtype=float)
    if not cutoff < f_s / 2:
        raise DomainError(f"cutoff {cutoff} Hz must be below Nyquist {f_s / 2} Hz")
    if len(x) < 4:
        logger.debug("series of %d samples passed through unfiltered", len(x))
        return x.copy()
    spec = np.fft.rfft(x)
    spec[np.fft.rfftfreq(len(x), d=1.0 / f_s) > cutoff] = 0.0
    return np.fft.irfft(spec, len(x))


def utility(sigma_large: float, sigma_small: float, profile: CalibrationProfile) -> float:
    return profile.alpha * sigma_large + profile.beta * sigma_small


def label_for(u: float, profile: CalibrationProfile) -> Label:
    return Label.OFF_BODY if u >= profile.threshold else Label.ON_BODY


def segment_features(segment: Segment, config: PipelineConfig = PipelineConfig()):
    """``(sigma_large, sigma_small)`` of one segment.

    Raises :class:`SilentSegment` for constant segments.
    """
    split = decompose(segment, config.lowest_freq, config.seed, config.energy_ratio,
                      config.band)
    residual = remove_motion(split.large_scale, segment.sample_rate, config.cutoff)
    return float(residual.std()), float(split.small_scale.std())


def classify_segment(segment: Segment, profile: CalibrationProfile,
                     config: PipelineConfig = PipelineConfig()) -> Decision:
    """Label one segment; a silent segment is a perfectly still on-body link."""
    try:
        sigma_l, sigma_s = segment_features(segment, config)
    except SilentSegment:
        return Decision(Label.ON_BODY, 0.0, 0.0, 0.0, degenerate=True)
    u = utility(sigma_l, sigma_s, profile)
    return Decision(label_for(u, profile), u, sigma_l, sigma_s, degenerate=len(segment) < 4)


def classify_trace(trace: RssTrace, profile: CalibrationProfile,
                   config: PipelineConfig = PipelineConfig()) -> list:
    return [classify_segment(seg, profile, config)
            for seg in segment_trace(trace, config.segment_interval)]


def trace_features(traces: Sequence[RssTrace], config: PipelineConfig = PipelineConfig()):
    """Per-segment ``(sigma_large, sigma_small)`` rows; silent segments skipped."""
    rows = []
    for trace in traces:
        for seg in segment_trace(trace, config.segment_interval):
            try:
                rows.append(segment_features(seg, config))
            except SilentSegment:
                logger.info("skipping silent calibration segment of %s at %d",
                            seg.link_id, seg.start)
    return np.asarray(rows, dtype=float).reshape(-1, 2)


def calibrate(on_traces: Sequence[RssTrace], off_traces: Sequence[RssTrace],
              config: PipelineConfig = PipelineConfig(), *,
              min_segments: int = 5) -> CalibrationProfile:
    """Learn weights and threshold from labelled on- and off-body traces."""
    on = trace_features(on_traces, config)
    off = trace_features(off_traces, config)
    for name, rows in (("on-body", on), ("off-body", off)):
        if len(rows) < min_segments:
            raise DomainError(
                f"{name} calibration needs at least {min_segments} usable segments, got {len(rows)}")
    l_on, s_on = on.mean(axis=0)
    l_off, s_off = off.mean(axis=0)
    return CalibrationProfile.from_means(l_on, s_on, l_off, s_off)
