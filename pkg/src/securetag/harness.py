"""Scenario engine: configuration files, calibration sets and seeded batches.

A scenario file is INI text with one ``[scenario]`` section, one
``[link:<name>]`` section per link and an optional ``[attack]`` section::

    [scenario]
    name = s1
    seeds = 0-99
    device = tag

    [link:tag]
    kind = onbody

    [link:intruder]
    kind = offbody
    env = calm
    distance = 2.0

    [attack]
    kind = spoofing
    link = intruder
"""
from __future__ import annotations

import configparser
import functools
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .channel import (BodyGeometry, EnvDynamics, LinkKind, LinkSpec, MotionProcess,
                      MotionState, RadioConfig, constant_distance, generate_trace)
from .errors import ConfigError, DomainError
from .matching import CalibrationProfile, PipelineConfig, calibrate
from .protocol import (AttackKind, AttackScript, FrameKind, Role, ScenarioOutcome,
                       build_net, compute_metrics, run_scenario)

logger = logging.getLogger(__name__)

CALIBRATION_SECONDS = 900.0  # per class
SWEEP_SAMPLE_PERIODS = (0.1, 0.2, 0.3, 0.4, 0.5)

_LINK_KEYS = {"kind", "motion", "motion_band", "motion_depth", "motion_seed", "env",
              "distance", "distance_track", "distance_cycle", "noise_std", "frequency",
              "transmit_power", "antenna_gain", "body_radius", "arc_distance",
              "antenna_height_tx", "antenna_height_rx", "permittivity",
              "path_loss_exponent", "seed"}
_SCENARIO_KEYS = {"name", "seeds", "device", "sample_period", "segment_interval",
                  "energy_ratio", "cutoff", "duration", "profile", "calibration_seed",
                  "sweep_sample_periods", "sweep_segment_intervals", "loss_probability"}
_ATTACK_KEYS = {"kind", "link", "start", "inject_kind", "repeats", "repeat_spacing", "jam"}


@dataclass(frozen=True)
class ScenarioConfig:
    """One scenario: links, optional attack and pipeline parameters.

    ``links`` holds :class:`LinkSpec` objects whose ``link_id`` is the link
    name. ``device`` names the on-body link of the protected device.
    """

    name: str
    links: tuple
    attack: Optional[AttackScript] = None
    sample_period: float = 0.2
    segment_interval: float = 20.0
    energy_ratio: float = 0.5
    cutoff: float = 0.5
    seeds: tuple = (0,)
    device: Optional[str] = None
    duration: float = 120.0
    profile_path: Optional[Path] = None
    calibration_seed: int = 0
    sweep_sample_periods: tuple = ()
    sweep_segment_intervals: tuple = ()
    loss_probability: float = 0.01

    def __post_init__(self):
        if not self.sample_period > 0 or not self.segment_interval > 0:
            raise ConfigError("sample_period and segment_interval must be positive")
        names = [link.link_id for link in self.links]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate link names in {names}")
        if self.device is not None and self.device not in names:
            raise ConfigError(f"device link {self.device!r} is not defined")
        if self.profile_path is not None and not Path(self.profile_path).is_file():
            raise ConfigError(f"profile file {self.profile_path} does not exist")

    def link(self, name: str) -> LinkSpec:
        for link in self.links:
            if link.link_id == name:
                return link
        raise ConfigError(f"no link named {name!r}")

    @property
    def device_link(self) -> LinkSpec:
        if self.device is not None:
            return self.link(self.device)
        for link in self.links:
            if link.kind is LinkKind.ON_BODY:
                return link
        raise ConfigError("scenario has no on-body link for the protected device")

    @property
    def pipeline(self) -> PipelineConfig:
        return PipelineConfig(segment_interval=self.segment_interval,
                              energy_ratio=self.energy_ratio, cutoff=self.cutoff)

    def with_overrides(self, *, seed=None, sample_period=None, segment_interval=None):
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seeds=(int(seed),))
        if sample_period is not None:
            cfg = replace(cfg, sample_period=float(sample_period), sweep_sample_periods=())
        if segment_interval is not None:
            cfg = replace(cfg, segment_interval=float(segment_interval),
                          sweep_segment_intervals=())
        return cfg


def parse_seeds(text: str) -> tuple:
    """``"0-3, 7"`` gives ``(0, 1, 2, 3, 7)``; an empty string gives no seeds."""
    seeds = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        lo, sep, hi = part.partition("-")
        try:
            seeds.extend(range(int(lo), int(hi) + 1) if sep else [int(lo)])
        except ValueError:
            raise ConfigError(f"bad seed list entry {part!r}") from None
    return tuple(seeds)


def _floats(text: str) -> tuple:
    return tuple(float(p) for p in text.split(",") if p.strip())


def distance_cycle(near: float, far: float, period: float, duration: float = 3600.0) -> tuple:
    """Triangle-wave distance track between ``near`` and ``far`` metres."""
    if not (near > 0 and far > 0 and period > 0):
        raise DomainError("distance_cycle needs positive near, far and period")
    knots = []
    for i in range(int(math.ceil(2 * duration / period)) + 1):
        knots.append((i * period / 2, near if i % 2 == 0 else far))
    return tuple(knots)


def _distance_track(section) -> tuple:
    given = [k for k in ("distance", "distance_track", "distance_cycle") if k in section]
    if len(given) > 1:
        raise ConfigError(f"give only one of distance, distance_track, distance_cycle; got {given}")
    if not given:
        return constant_distance(2.0)
    key = given[0]
    if key == "distance":
        return constant_distance(float(section[key]))
    if key == "distance_cycle":
        return distance_cycle(*_floats(section[key]))
    knots = []
    for part in section[key].split(","):
        t, _, d = part.partition(":")
        knots.append((float(t), float(d)))
    return tuple(knots)


def link_from_section(name: str, section) -> LinkSpec:
    """Build a :class:`LinkSpec` from one ``[link:<name>]`` section."""
    unknown = set(section) - _LINK_KEYS
    if unknown:
        raise ConfigError(f"link {name!r}: unknown keys {sorted(unknown)}")
    get = section.get
    motion = MotionProcess(
        state=MotionState(get("motion", "static")),
        dominant_band=_floats(section["motion_band"]) if "motion_band" in section else None,
        modulation_depth=float(section["motion_depth"]) if "motion_depth" in section else None,
        rng_seed=int(get("motion_seed", "0")))
    radio = RadioConfig(
        transmit_power=float(get("transmit_power", "1e-3")),
        antenna_gain=float(get("antenna_gain", "1.0")),
        frequency=float(get("frequency", "2.4e9")))
    geometry = BodyGeometry(
        body_radius=float(get("body_radius", "0.15")),
        arc_distance=float(get("arc_distance", "0.3")),
        antenna_height_tx=float(get("antenna_height_tx", "0.005")),
        antenna_height_rx=float(get("antenna_height_rx", "0.005")),
        tissue_permittivity=complex(get("permittivity", "38-11j").replace(" ", "")))
    return LinkSpec(
        kind=LinkKind(get("kind", "onbody")),
        radio=radio,
        geometry=geometry,
        distance_track=_distance_track(section),
        env_dynamics=EnvDynamics(get("env", "calm")),
        motion=motion,
        noise_std=float(get("noise_std", "2.0")),
        path_loss_exponent=float(get("path_loss_exponent", "2.2")),
        rng_seed=int(get("seed", "0")),
        link_id=name)


def _attack_from_section(section, links: dict) -> AttackScript:
    unknown = set(section) - _ATTACK_KEYS
    if unknown:
        raise ConfigError(f"attack: unknown keys {sorted(unknown)}")
    name = section.get("link")
    if name is None:
        raise ConfigError("attack section needs link = <name of the attacker link>")
    if name not in links:
        raise ConfigError(f"attack link {name!r} is not defined")
    kwargs = {}
    if "start" in section:
        kwargs["start"] = float(section["start"])
    if "inject_kind" in section:
        kwargs["inject_kind"] = FrameKind(section["inject_kind"])
    if "repeats" in section:
        kwargs["repeats"] = int(section["repeats"])
    if "repeat_spacing" in section:
        kwargs["repeat_spacing"] = float(section["repeat_spacing"])
    if "jam" in section:
        jam = []
        for part in filter(None, (p.strip() for p in section["jam"].split(","))):
            try:
                origin, receiver, kind = (s.strip() for s in part.split(">"))
                jam.append((Role(origin), Role(receiver), FrameKind(kind)))
            except ValueError:
                raise ConfigError(f"bad jam entry {part!r}, expected Origin>Receiver>FrameKind") from None
        kwargs["jam"] = tuple(jam)
    return AttackScript(AttackKind(section.get("kind", "spoofing")), links[name], **kwargs)


def load_config(path) -> ScenarioConfig:
    """Parse a scenario file; every problem surfaces as :class:`ConfigError`."""
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return _config_from_parser(parser, path)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _config_from_parser(parser, path: Path) -> ScenarioConfig:
    if "scenario" not in parser:
        raise ConfigError("missing [scenario] section")
    sc = parser["scenario"]
    unknown = set(sc) - _SCENARIO_KEYS
    if unknown:
        raise ConfigError(f"scenario: unknown keys {sorted(unknown)}")
    links = {}
    for section in parser.sections():
        if section.startswith("link:"):
            name = section.split(":", 1)[1].strip()
            links[name] = link_from_section(name, parser[section])
        elif section not in ("scenario", "attack"):
            raise ConfigError(f"unknown section [{section}]")
    if not links:
        raise ConfigError("scenario defines no [link:<name>] sections")
    attack = _attack_from_section(parser["attack"], links) if "attack" in parser else None
    profile = sc.get("profile")
    if profile is not None:
        profile = Path(profile)
        if not profile.is_absolute():
            profile = path.parent / profile
    return ScenarioConfig(
        name=sc.get("name", path.stem),
        links=tuple(links.values()),
        attack=attack,
        sample_period=sc.getfloat("sample_period", 0.2),
        segment_interval=sc.getfloat("segment_interval", 20.0),
        energy_ratio=sc.getfloat("energy_ratio", 0.5),
        cutoff=sc.getfloat("cutoff", 0.5),
        seeds=parse_seeds(sc.get("seeds", "0")),
        device=sc.get("device"),
        duration=sc.getfloat("duration", 120.0),
        profile_path=profile,
        calibration_seed=sc.getint("calibration_seed", 0),
        sweep_sample_periods=_floats(sc.get("sweep_sample_periods", "")),
        sweep_segment_intervals=_floats(sc.get("sweep_segment_intervals", "")),
        loss_probability=sc.getfloat("loss_probability", 0.01))


# --- built-in scenarios ----------------------------------------------------

_WALK = MotionProcess(MotionState.WALKING)


def preset(name: str) -> ScenarioConfig:
    """Built-in two-person scenarios ``S1`` to ``S4``.

    ``S1``  both people sit 2 m apart.
    ``S2``  both walk side by side 2 m apart along a corridor.
    ``S3``  the wearer walks along the aisle while the attacker sits.
    ``S4``  the attacker walks along the aisle while the wearer sits.
    """
    key = name.upper()
    aisle = distance_cycle(2.0, 8.0, 20.0)
    if key == "S1":
        tag = LinkSpec(kind=LinkKind.ON_BODY, link_id="tag")
        intruder = LinkSpec(kind=LinkKind.OFF_BODY, env_dynamics=EnvDynamics.CALM,
                            distance_track=constant_distance(2.0), link_id="intruder")
    elif key == "S2":
        tag = LinkSpec(kind=LinkKind.ON_BODY, motion=_WALK, link_id="tag")
        intruder = LinkSpec(kind=LinkKind.OFF_BODY, env_dynamics=EnvDynamics.MODERATE,
                            motion=_WALK, distance_track=constant_distance(2.0),
                            link_id="intruder")
    elif key == "S3":
        tag = LinkSpec(kind=LinkKind.ON_BODY, motion=_WALK, link_id="tag")
        intruder = LinkSpec(kind=LinkKind.OFF_BODY, env_dynamics=EnvDynamics.CALM,
                            distance_track=aisle, link_id="intruder")
    elif key == "S4":
        tag = LinkSpec(kind=LinkKind.ON_BODY, link_id="tag")
        intruder = LinkSpec(kind=LinkKind.OFF_BODY, env_dynamics=EnvDynamics.CALM,
                            motion=_WALK, distance_track=aisle, link_id="intruder")
    else:
        raise ConfigError(f"unknown preset {name!r}; choose S1, S2, S3 or S4")
    attack = AttackScript(AttackKind.AUTHENTICATED_SPOOFING, intruder)
    return ScenarioConfig(name=key.lower(), links=(tag, intruder), attack=attack,
                          seeds=tuple(range(100)), device="tag")


# --- calibration -----------------------------------------------------------

def calibration_traces(sample_period: float = 0.2, seed: int = 0,
                       seconds: float = CALIBRATION_SECONDS):
    """Labelled traces: half static, half walking on-body; half calm, half busy off-body."""
    half = seconds / 2

    def trace(offset, **kw):
        return generate_trace(LinkSpec(duration=half, sample_period=sample_period,
                                       rng_seed=10_000 * (seed + 1) + offset, **kw))

    on = [trace(1, kind=LinkKind.ON_BODY),
          trace(2, kind=LinkKind.ON_BODY, motion=_WALK)]
    off = [trace(3, kind=LinkKind.OFF_BODY, env_dynamics=EnvDynamics.CALM),
           trace(4, kind=LinkKind.OFF_BODY, env_dynamics=EnvDynamics.BUSY)]
    return on, off


@functools.lru_cache(maxsize=32)
def default_profile(sample_period: float = 0.2, config: PipelineConfig = PipelineConfig(),
                    seed: int = 0, seconds: float = CALIBRATION_SECONDS) -> CalibrationProfile:
    """Profile calibrated on simulator defaults, cached per argument set."""
    on, off = calibration_traces(sample_period, seed, seconds)
    return calibrate(on, off, config)


# --- seeded batches --------------------------------------------------------

def _run_one(cfg: ScenarioConfig, profile: CalibrationProfile, seed: int) -> ScenarioOutcome:
    device = replace(cfg.device_link, sample_period=cfg.sample_period)
    attacker_link, script = None, None
    if cfg.attack is not None:
        attacker_link = replace(cfg.attack.attacker_link, sample_period=cfg.sample_period)
        script = replace(cfg.attack, attacker_link=attacker_link)
    net = build_net(device, profile, attacker_link=attacker_link, config=cfg.pipeline,
                    seed=seed, loss_probability=cfg.loss_probability, device_id=device.link_id)
    return run_scenario(net, script)


def _run_one_packed(args):
    return args[2], _run_one(*args)


def check_topology(cfg: ScenarioConfig) -> None:
    """Raise :class:`ConfigError` if the scenario cannot form a valid network."""
    device = cfg.device_link
    if device.kind is not LinkKind.ON_BODY:
        raise ConfigError(f"device link {device.link_id!r} must be on-body")
    if cfg.attack is not None:
        if cfg.attack.attacker_link.link_id == device.link_id:
            raise ConfigError("the attacker cannot share the device's link")


def run_batch(cfg: ScenarioConfig, profile: CalibrationProfile,
              workers: int = 1) -> tuple:
    """Run every seed of ``cfg``; returns ``(outcomes in seed order, Metrics)``.

    Returns ``([], None)`` when the scenario lists no seeds.
    """
    check_topology(cfg)
    if not cfg.seeds:
        return [], None
    t0 = time.perf_counter()
    jobs = [(cfg, profile, seed) for seed in cfg.seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(_run_one_packed, jobs))
    else:
        results = dict(map(_run_one_packed, jobs))
    outcomes = [results[seed] for seed in cfg.seeds]
    return outcomes, compute_metrics(outcomes, time.perf_counter() - t0)


def sweep_points(cfg: ScenarioConfig) -> list:
    """``(parameter name, value, config)`` triples for every sweep point.

    A scenario without sweeps yields a single point for its sample period.
    """
    points = [("sample_period", p, replace(cfg, sample_period=p))
              for p in cfg.sweep_sample_periods]
    points += [("segment_interval", s, replace(cfg, segment_interval=s))
               for s in cfg.sweep_segment_intervals]
    return points or [("sample_period", cfg.sample_period, cfg)]


def default_workers() -> int:
    return max(1, min(os.cpu_count() or 1, 8))


def metrics_params(cfg: ScenarioConfig, parameter: str, value: float) -> dict:
    return {
        "scenario": cfg.name,
        "attack": cfg.attack.kind.value if cfg.attack is not None else None,
        "sweep": parameter,
        "value": value,
        "sample_period": cfg.sample_period,
        "segment_interval": cfg.segment_interval,
        "energy_ratio": cfg.energy_ratio,
        "cutoff": cfg.cutoff,
        "seeds": list(cfg.seeds),
    }
