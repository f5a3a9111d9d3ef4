"""Challenge-response flows that tie association to propagation patterns.

Three flows are modelled as pure state transition functions over a shared
broadcast medium:

* association with pattern verification (hub asks the claimant for a burst
  of empty packets and checks the RSS of the burst),
* the same verification stage defeating a jam-and-replay attacker,
* deadlock mitigation, where a device that overhears an authentication
  request or deauthentication notice in its own name that it did not send
  challenges it, and the hub re-verifies before honouring the notice.

:class:`SimNet` runs the devices on a deterministic event loop and annotates
every delivered frame with RSS drawn from the sender to receiver link. The
claimed sender id of a frame never affects that annotation.
"""
from __future__ import annotations

import enum
import heapq
import itertools
import logging
import zlib
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .channel import EnvDynamics, LinkKind, LinkSpec, constant_distance, generate_trace
from .decomposition import Segment
from .errors import ConfigError
from .matching import CalibrationProfile, Decision, Label, PipelineConfig, classify_segment

logger = logging.getLogger(__name__)

LOG_HEADER = "t_s,origin,receiver,kind,claimed_id,rss_dbm,session_state"


class FrameKind(str, enum.Enum):
    ASSOCIATION_REQUEST = "AssociationRequest"
    PATTERN_VERIFY_REQUEST = "PatternVerifyRequest"
    EMPTY_PACKET = "EmptyPacket"
    AUTH_REQUEST = "AuthRequest"
    DEAUTH_NOTIFICATION = "DeauthNotification"
    CHALLENGE = "Challenge"
    VERIFY_GRANT = "VerifyGrant"
    VERIFY_REJECT = "VerifyReject"
    DATA_PACKET = "DataPacket"


CONTROL_KINDS = (FrameKind.AUTH_REQUEST, FrameKind.DEAUTH_NOTIFICATION)
MAX_CHALLENGE_RETRIES = 3


class Role(str, enum.Enum):
    IOT_DEVICE = "IotDevice"
    HUB = "LegitimateHub"
    ATTACKER = "Attacker"


class Session(str, enum.Enum):
    IDLE = "Idle"
    AWAIT_VERIFY_REQUEST = "AwaitVerifyRequest"
    SENDING_BURST = "SendingBurst"
    COLLECTING_BURST = "CollectingBurst"
    VERIFYING = "Verifying"
    ASSOCIATED = "Associated"
    REJECTED = "Rejected"
    CHALLENGE_PENDING = "ChallengePending"


class AttackKind(str, enum.Enum):
    AUTHENTICATED_SPOOFING = "spoofing"
    JAMMING_REPLAY = "jamming"
    DEADLOCK_INJECTION = "deadlock"


@dataclass(frozen=True)
class Frame:
    kind: FrameKind
    sender_claimed_id: str
    origin_device: str
    nonce: int = 0
    seq: int = 0


@dataclass(frozen=True)
class Delivery:
    """A frame as heard by a receiver, with its RSS reading."""

    frame: Frame
    rss: float


@dataclass(frozen=True)
class Timer:
    name: str
    token: int = 0


@dataclass(frozen=True)
class Send:
    frame: Frame
    delay: float = 0.0


@dataclass(frozen=True)
class SetTimer:
    name: str
    delay: float
    token: int = 0


@dataclass(frozen=True)
class Verdict:
    """Outcome of one verification stage, reported by the hub."""

    nonce: int
    decision: Decision
    purpose: str


@dataclass(frozen=True)
class ControlApplied:
    """The hub honoured an unchallenged control frame."""

    kind: FrameKind


@dataclass(frozen=True)
class DeviceState:
    device_id: str
    role: Role
    session: Session = Session.IDLE
    peer_id: str = ""
    collected_rss: tuple = ()  # (seq, rss) pairs of the burst being collected
    pending_nonce: int = 0
    nonce_counter: int = 0
    purpose: str = "associate"
    pending_control: Optional[FrameKind] = None
    failures: int = 0
    backoff_until: float = 0.0
    sent_controls: frozenset = frozenset()
    challenge_outstanding: bool = False
    seq_counter: int = 0


@dataclass(frozen=True)
class ProtocolTiming:
    """Protocol constants shared by all devices of a network."""

    sample_period: float = 0.2
    window: float = 20.0
    collect_slack: float = 2.0
    association_timeout: float = 3.0
    deauth_grace: float = 1.0
    backoff_base: float = 2.0
    max_backoff: float = 16.0
    min_fill: float = 0.5

    @property
    def burst_length(self) -> int:
        return int(round(self.window / self.sample_period))


@dataclass(frozen=True)
class HubContext:
    profile: CalibrationProfile
    config: PipelineConfig = PipelineConfig()
    timing: ProtocolTiming = ProtocolTiming()


def _burst(state: DeviceState, nonce: int, timing: ProtocolTiming):
    return [Send(Frame(FrameKind.EMPTY_PACKET, state.peer_id or state.device_id,
                       state.device_id, nonce, k), k * timing.sample_period)
            for k in range(timing.burst_length)]


def burst_segment(collected: Sequence, timing: ProtocolTiming) -> Segment:
    """Uniform segment from a possibly lossy burst, gaps linearly interpolated."""
    pairs = sorted(collected)
    seqs = np.array([p[0] for p in pairs], dtype=float)
    rss = np.array([p[1] for p in pairs], dtype=float)
    grid = np.arange(timing.burst_length, dtype=float)
    return Segment(np.interp(grid, seqs, rss), 1.0 / timing.sample_period, "burst")


def _start_verification(state, claimed, t, timing, purpose):
    nonce = state.nonce_counter + 1
    new = replace(state, session=Session.AWAIT_VERIFY_REQUEST, peer_id=claimed,
                  collected_rss=(), pending_nonce=nonce, nonce_counter=nonce,
                  purpose=purpose)
    return new, [Send(Frame(FrameKind.PATTERN_VERIFY_REQUEST, claimed, state.device_id, nonce)),
                 SetTimer("verify_timeout", timing.window + timing.collect_slack, nonce)]


def _finish_verification(state, t, ctx: HubContext):
    timing = ctx.timing
    if len(state.collected_rss) < max(2, timing.min_fill * timing.burst_length):
        # no usable burst: nothing to judge, fall back to the previous standing
        if state.purpose == "challenge":
            new = replace(state, session=Session.ASSOCIATED, collected_rss=())
            return new, [SetTimer("grace", 0.0)]
        return replace(state, session=Session.IDLE, collected_rss=()), []
    decision = classify_segment(burst_segment(state.collected_rss, timing), ctx.profile,
                                ctx.config)
    verdict = Verdict(state.pending_nonce, decision, state.purpose)
    if decision.label is Label.ON_BODY:
        new = replace(state, session=Session.ASSOCIATED, collected_rss=(), failures=0,
                      pending_control=None)
        kind = FrameKind.VERIFY_GRANT
    else:
        failures = state.failures + 1
        new = replace(state, session=Session.REJECTED, collected_rss=(), failures=failures,
                      pending_control=None,
                      backoff_until=t + min(timing.backoff_base * 2 ** (failures - 1),
                                            timing.max_backoff))
        kind = FrameKind.VERIFY_REJECT
    return new, [Send(Frame(kind, state.peer_id, state.device_id, state.pending_nonce)), verdict]


def hub_step(state: DeviceState, event, t: float, ctx: HubContext):
    """Transition of the legitimate hub.

    Returns ``(new_state, actions)``; frames that make no sense in the
    current session leave the state untouched.
    """
    timing = ctx.timing
    if isinstance(event, Timer):
        if event.name == "verify_timeout" and event.token == state.pending_nonce and \
                state.session in (Session.AWAIT_VERIFY_REQUEST, Session.COLLECTING_BURST):
            return _finish_verification(state, t, ctx)
        if event.name == "grace" and state.session is Session.ASSOCIATED and \
                state.pending_control is not None:
            kind = state.pending_control
            return replace(state, session=Session.IDLE, pending_control=None), [ControlApplied(kind)]
        return state, []

    frame = event.frame
    kind = frame.kind
    in_session = frame.sender_claimed_id == state.peer_id

    if kind in (FrameKind.ASSOCIATION_REQUEST, FrameKind.CHALLENGE) and in_session and \
            state.session is Session.AWAIT_VERIFY_REQUEST:
        # the claimant never heard our request: start over with a fresh nonce
        pending = state.pending_control
        new, actions = _start_verification(state, state.peer_id, t, timing, state.purpose)
        return replace(new, pending_control=pending), actions
    if kind is FrameKind.ASSOCIATION_REQUEST:
        fresh = state.session is Session.IDLE or (
            state.session is Session.REJECTED and t >= state.backoff_until)
        if fresh:
            return _start_verification(state, frame.sender_claimed_id, t, timing, "associate")
    elif kind is FrameKind.EMPTY_PACKET:
        if in_session and frame.nonce == state.pending_nonce and state.session in (
                Session.AWAIT_VERIFY_REQUEST, Session.COLLECTING_BURST):
            collected = state.collected_rss + ((frame.seq, event.rss),)
            new = replace(state, session=Session.COLLECTING_BURST, collected_rss=collected)
            if frame.seq >= timing.burst_length - 1:
                return _finish_verification(new, t, ctx)
            return new, []
    elif kind in CONTROL_KINDS:
        if in_session and state.session is Session.ASSOCIATED and state.pending_control is None:
            return replace(state, pending_control=kind), [SetTimer("grace", timing.deauth_grace)]
    elif kind is FrameKind.CHALLENGE:
        if in_session and state.session is Session.ASSOCIATED:
            pending = state.pending_control
            new, actions = _start_verification(state, frame.sender_claimed_id, t, timing, "challenge")
            return replace(new, pending_control=pending), actions
    logger.debug("hub ignores %s in %s", kind.value, state.session.value)
    return state, []


def device_step(state: DeviceState, event, t: float, timing: ProtocolTiming):
    """Transition of a legitimate on-body IoT device."""
    me = state.device_id
    if isinstance(event, Timer):
        if event.name == "associate" and state.session in (Session.IDLE, Session.REJECTED):
            seq = state.seq_counter + 1
            new = replace(state, session=Session.AWAIT_VERIFY_REQUEST, seq_counter=seq)
            return new, [Send(Frame(FrameKind.ASSOCIATION_REQUEST, me, me, 0, seq)),
                         SetTimer("association_timeout", timing.association_timeout, seq)]
        if event.name == "association_timeout" and event.token == state.seq_counter and \
                state.session is Session.AWAIT_VERIFY_REQUEST:
            return _device_backoff(state, timing)
        if event.name == "burst_timeout" and event.token == state.seq_counter and \
                state.session is Session.SENDING_BURST:
            return _device_backoff(state, timing)
        if event.name == "challenge_timeout" and state.session is Session.CHALLENGE_PENDING:
            if state.failures >= MAX_CHALLENGE_RETRIES:
                return _device_backoff(replace(state, challenge_outstanding=False), timing)
            return replace(state, failures=state.failures + 1), [
                Send(Frame(FrameKind.CHALLENGE, me, me)),
                SetTimer("challenge_timeout", timing.association_timeout)]
        if event.name == "leave" and state.session is Session.ASSOCIATED:
            seq = state.seq_counter + 1
            new = replace(state, session=Session.IDLE, seq_counter=seq,
                          sent_controls=state.sent_controls | {seq})
            return new, [Send(Frame(FrameKind.DEAUTH_NOTIFICATION, me, me, 0, seq))]
        return state, []

    frame = event.frame
    if frame.sender_claimed_id != me:
        return state, []
    kind = frame.kind
    if kind is FrameKind.PATTERN_VERIFY_REQUEST and state.session in (
            Session.AWAIT_VERIFY_REQUEST, Session.CHALLENGE_PENDING):
        seq = state.seq_counter + 1
        new = replace(state, session=Session.SENDING_BURST, pending_nonce=frame.nonce,
                      peer_id=me, seq_counter=seq)
        slack = timing.window + 2 * timing.collect_slack
        return new, _burst(new, frame.nonce, timing) + [SetTimer("burst_timeout", slack, seq)]
    if kind in (FrameKind.VERIFY_GRANT, FrameKind.VERIFY_REJECT) and \
            state.session is Session.SENDING_BURST and frame.nonce == state.pending_nonce:
        if kind is FrameKind.VERIFY_GRANT:
            return replace(state, session=Session.ASSOCIATED, failures=0,
                           challenge_outstanding=False), []
        return _device_backoff(replace(state, challenge_outstanding=False), timing)
    if kind in CONTROL_KINDS and frame.seq not in state.sent_controls:
        if state.challenge_outstanding:
            return state, []
        new = replace(state, session=Session.CHALLENGE_PENDING, challenge_outstanding=True)
        return new, [Send(Frame(FrameKind.CHALLENGE, me, me)),
                     SetTimer("challenge_timeout", timing.association_timeout)]
    return state, []


def _device_backoff(state, timing):
    failures = state.failures + 1
    delay = min(timing.backoff_base * 2 ** (failures - 1), timing.max_backoff)
    return replace(state, session=Session.REJECTED, failures=failures), [
        SetTimer("associate", delay)]


@dataclass(frozen=True)
class AttackScript:
    """What the attacker does and when.

    ``jam`` lists ``(origin_role, receiver_role, frame_kind)`` deliveries the
    attacker suppresses while its attempt is unresolved. ``inject_kind`` and
    ``repeats`` only matter for deadlock injection.
    """

    kind: AttackKind
    attacker_link: LinkSpec
    start: float = 1.0
    jam: tuple = ((Role.HUB, Role.IOT_DEVICE, FrameKind.PATTERN_VERIFY_REQUEST),
                  (Role.HUB, Role.IOT_DEVICE, FrameKind.VERIFY_GRANT))
    inject_kind: FrameKind = FrameKind.DEAUTH_NOTIFICATION
    repeats: int = 1
    repeat_spacing: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackKind(self.kind))
        if self.attacker_link.kind is not LinkKind.OFF_BODY:
            raise ConfigError("the attacker is never on the victim's body: attacker_link must be off-body")


def attacker_step(state: DeviceState, event, t: float, script: AttackScript,
                  timing: ProtocolTiming):
    """Scripted behaviour of the attacker; ``peer_id`` is the spoofed id."""
    victim = state.peer_id
    if isinstance(event, Timer):
        if event.name == "burst_timeout" and state.session is Session.SENDING_BURST:
            return replace(state, session=Session.REJECTED), []
        if event.name == "attack":
            if script.kind is AttackKind.AUTHENTICATED_SPOOFING:
                return replace(state, session=Session.AWAIT_VERIFY_REQUEST), [
                    Send(Frame(FrameKind.ASSOCIATION_REQUEST, victim, state.device_id, 0, 1))]
            if script.kind is AttackKind.JAMMING_REPLAY:
                return replace(state, session=Session.AWAIT_VERIFY_REQUEST), []
            actions = [Send(Frame(script.inject_kind, victim, state.device_id, 0, 10_000 + i),
                            i * script.repeat_spacing) for i in range(script.repeats)]
            return replace(state, session=Session.REJECTED), actions
        return state, []

    frame = event.frame
    if frame.sender_claimed_id != victim or state.session is Session.IDLE:
        return state, []
    kind = frame.kind
    if script.kind is AttackKind.JAMMING_REPLAY and kind is FrameKind.ASSOCIATION_REQUEST \
            and state.session is Session.AWAIT_VERIFY_REQUEST:
        # replay the recorded request so the hub hears it from our antenna too
        return state, [Send(replace(frame, origin_device=state.device_id), 0.05)]
    if kind is FrameKind.PATTERN_VERIFY_REQUEST and state.session is Session.AWAIT_VERIFY_REQUEST:
        new = replace(state, session=Session.SENDING_BURST, pending_nonce=frame.nonce)
        slack = timing.window + 2 * timing.collect_slack
        return new, _burst(new, frame.nonce, timing) + [SetTimer("burst_timeout", slack)]
    if kind in (FrameKind.VERIFY_GRANT, FrameKind.VERIFY_REJECT) and \
            state.session is Session.SENDING_BURST and frame.nonce == state.pending_nonce:
        granted = kind is FrameKind.VERIFY_GRANT
        return replace(state, session=Session.ASSOCIATED if granted else Session.REJECTED), []
    return state, []


@dataclass(frozen=True)
class LogEntry:
    t: float
    origin: str
    receiver: str
    kind: str
    claimed_id: str
    rss_dbm: float
    session_state: str

    def to_csv(self) -> str:
        rss = "" if np.isnan(self.rss_dbm) else f"{self.rss_dbm:g}"
        return f"{self.t:.6f},{self.origin},{self.receiver},{self.kind},{self.claimed_id},{rss},{self.session_state}"


@dataclass(frozen=True)
class VerificationRecord:
    t: float
    nonce: int
    purpose: str
    origins: frozenset
    decision: Decision

    @property
    def granted(self) -> bool:
        return self.decision.label is Label.ON_BODY


@dataclass
class ScenarioOutcome:
    attack: Optional[AttackKind]
    attempts: list = field(default_factory=list)  # one bool per attack attempt
    verifications: list = field(default_factory=list)
    event_log: list = field(default_factory=list)
    hub_session: Session = Session.IDLE
    controls_applied: list = field(default_factory=list)
    device_id: str = "tag"
    attacker_id: Optional[str] = None

    @property
    def legit_decisions(self) -> list:
        return [v.decision for v in self.verifications if v.origins == {self.device_id}]

    @property
    def associated(self) -> bool:
        return any(v.granted and v.origins == {self.device_id} for v in self.verifications)


class SimNet:
    """Single-hub broadcast network with per-link RSS annotation.

    Parameters
    ----------
    links : dict
        ``(origin_id, receiver_id) -> LinkSpec``. A missing direction falls
        back to the reverse direction, then to a calm off-body link at 2 m.
    """

    def __init__(self, hub: DeviceState, device: DeviceState, links: dict,
                 ctx: HubContext, attacker: Optional[DeviceState] = None,
                 rng_seed: int = 0, loss_probability: float = 0.01,
                 propagation_delay: float = 0.002):
        self.states = {hub.device_id: hub, device.device_id: device}
        if attacker is not None:
            self.states[attacker.device_id] = attacker
        self.hub_id, self.device_id = hub.device_id, device.device_id
        self.attacker_id = attacker.device_id if attacker is not None else None
        self.links = dict(links)
        self.ctx = ctx
        self.rng_seed = rng_seed
        self.loss_probability = loss_probability
        self.propagation_delay = propagation_delay
        self._traces = {}
        self._validate()

    def _validate(self):
        roles = [s.role for s in self.states.values()]
        if roles.count(Role.HUB) != 1 or roles.count(Role.IOT_DEVICE) != 1 or \
                roles.count(Role.ATTACKER) > 1:
            raise ConfigError("need exactly one hub, one IoT device and at most one attacker")
        link = self.link(self.device_id, self.hub_id)
        if link.kind is not LinkKind.ON_BODY:
            raise ConfigError("the device to hub link must be on-body")
        if self.attacker_id is not None and \
                self.link(self.attacker_id, self.hub_id).kind is not LinkKind.OFF_BODY:
            raise ConfigError("the attacker to hub link must be off-body")

    def link(self, origin: str, receiver: str) -> LinkSpec:
        if (origin, receiver) in self.links:
            return self.links[(origin, receiver)]
        if (receiver, origin) in self.links:
            return self.links[(receiver, origin)]
        return LinkSpec(kind=LinkKind.OFF_BODY, env_dynamics=EnvDynamics.CALM,
                        distance_track=constant_distance(2.0),
                        sample_period=self.ctx.timing.sample_period,
                        rng_seed=zlib.crc32(f"{origin}->{receiver}".encode()) & 0xFFFF)

    def rss(self, origin: str, receiver: str, t: float, duration: float) -> float:
        key = (origin, receiver, duration)
        if key not in self._traces:
            spec = replace(self.link(origin, receiver),
                           sample_period=self.ctx.timing.sample_period,
                           duration=duration + 2 * self.ctx.timing.sample_period,
                           rng_seed=self.link(origin, receiver).rng_seed + 7919 * self.rng_seed,
                           link_id=f"{origin}->{receiver}")
            self._traces[key] = generate_trace(spec).values
        values = self._traces[key]
        idx = min(int(round(t / self.ctx.timing.sample_period)), len(values) - 1)
        return float(values[idx])

    def _step(self, dev_id, event, t, script):
        state = self.states[dev_id]
        timing = self.ctx.timing
        if state.role is Role.HUB:
            return hub_step(state, event, t, self.ctx)
        if state.role is Role.IOT_DEVICE:
            return device_step(state, event, t, timing)
        return attacker_step(state, event, t, script, timing)

    def _jammed(self, origin, receiver, kind, script, t):
        if script is None or script.kind is not AttackKind.JAMMING_REPLAY or t < script.start:
            return False
        attacker = self.states[self.attacker_id]
        if attacker.session in (Session.REJECTED, Session.ASSOCIATED):
            return False
        key = (self.states[origin].role, self.states[receiver].role, kind)
        return key in script.jam

    def run(self, script: Optional[AttackScript], duration: float,
            device_start: float = 1.0, device_leave: Optional[float] = None) -> ScenarioOutcome:
        """Execute the scenario until ``duration`` seconds of simulated time."""
        rng = np.random.default_rng([self.rng_seed, 0xB0D7])
        counter = itertools.count()
        queue = []

        def push(t, target, event):
            heapq.heappush(queue, (t, next(counter), target, event))

        outcome = ScenarioOutcome(attack=script.kind if script else None,
                                  device_id=self.device_id, attacker_id=self.attacker_id)
        push(device_start, self.device_id, Timer("associate"))
        if device_leave is not None:
            push(device_leave, self.device_id, Timer("leave"))
        if script is not None:
            push(script.start, self.attacker_id, Timer("attack"))
        burst_origins = {}

        while queue:
            t, _, target, event = heapq.heappop(queue)
            if t > duration:
                break
            if isinstance(event, tuple):  # transmission: fan out to every receiver
                frame = event[1]
                for receiver in self.states:
                    if receiver == frame.origin_device:
                        continue
                    if self._jammed(frame.origin_device, receiver, frame.kind, script, t):
                        outcome.event_log.append(LogEntry(
                            t, frame.origin_device, receiver, "Jammed:" + frame.kind.value,
                            frame.sender_claimed_id, float("nan"),
                            self.states[receiver].session.value))
                        continue
                    if rng.random() < self.loss_probability:
                        continue
                    rss = self.rss(frame.origin_device, receiver, t, duration)
                    push(t + self.propagation_delay, receiver, Delivery(frame, rss))
                continue

            if isinstance(event, Delivery) and target == self.hub_id and \
                    event.frame.kind is FrameKind.EMPTY_PACKET:
                burst_origins.setdefault(event.frame.nonce, set()).add(event.frame.origin_device)
            new_state, actions = self._step(target, event, t, script)
            self.states[target] = new_state
            if isinstance(event, Delivery):
                outcome.event_log.append(LogEntry(
                    t, event.frame.origin_device, target, event.frame.kind.value,
                    event.frame.sender_claimed_id, event.rss, new_state.session.value))
            for action in actions:
                if isinstance(action, Send):
                    push(t + action.delay, target, ("tx", action.frame))
                elif isinstance(action, SetTimer):
                    push(t + action.delay, target, Timer(action.name, action.token))
                elif isinstance(action, Verdict):
                    origins = frozenset(burst_origins.get(action.nonce, ()))
                    outcome.verifications.append(VerificationRecord(
                        t, action.nonce, action.purpose, origins, action.decision))
                    outcome.event_log.append(LogEntry(
                        t, ";".join(sorted(origins)) or "-", target,
                        "Verify:" + action.decision.label.value, new_state.peer_id,
                        float("nan"), new_state.session.value))
                elif isinstance(action, ControlApplied):
                    outcome.controls_applied.append(action.kind)
                    outcome.event_log.append(LogEntry(
                        t, "-", target, "Applied:" + action.kind.value, new_state.peer_id,
                        float("nan"), new_state.session.value))

        outcome.hub_session = self.states[self.hub_id].session
        outcome.attempts = self._attempts(script, outcome)
        return outcome

    def _attempts(self, script, outcome):
        if script is None:
            return []
        if script.kind is AttackKind.DEADLOCK_INJECTION:
            held = outcome.hub_session is Session.ASSOCIATED and not outcome.controls_applied
            return [held]
        breached = any(v.granted and self.attacker_id in v.origins for v in outcome.verifications)
        return [not breached]


def safety_holds(event_log: Sequence[LogEntry], hub_id: str = "hub") -> bool:
    """No hub session reaches Associated except right after an on-body verdict."""
    last_verdict = None
    for entry in event_log:
        if entry.receiver != hub_id:
            continue
        if entry.kind.startswith("Verify:"):
            last_verdict = entry.kind.split(":", 1)[1]
            if entry.session_state == Session.ASSOCIATED.value and last_verdict != Label.ON_BODY.value:
                return False
    return True


def build_net(device_link: LinkSpec, profile: CalibrationProfile, *,
              attacker_link: Optional[LinkSpec] = None, config: PipelineConfig = PipelineConfig(),
              timing: Optional[ProtocolTiming] = None, seed: int = 0,
              loss_probability: float = 0.01, device_id: str = "tag") -> SimNet:
    """Hub, IoT device and optional attacker spoofing the device's id."""
    if timing is None:
        timing = ProtocolTiming(sample_period=device_link.sample_period,
                                window=config.segment_interval)
    ctx = HubContext(profile, config, timing)
    hub = DeviceState("hub", Role.HUB)
    device = DeviceState(device_id, Role.IOT_DEVICE)
    links = {(device_id, "hub"): replace(device_link, rng_seed=device_link.rng_seed + seed)}
    attacker = None
    if attacker_link is not None:
        attacker = DeviceState("attacker", Role.ATTACKER, peer_id=device_id)
        links[("attacker", "hub")] = replace(attacker_link, rng_seed=attacker_link.rng_seed + seed)
    return SimNet(hub, device, links, ctx, attacker, rng_seed=seed,
                  loss_probability=loss_probability)


def run_scenario(net: SimNet, script: Optional[AttackScript] = None,
                 duration: Optional[float] = None) -> ScenarioOutcome:
    """Run one benign or attacked scenario with a standard timeline.

    Spoofing attackers strike before the device powers up; jammers wait for
    the device's own association; deadlock injection targets an established
    session.
    """
    timing = net.ctx.timing
    window = timing.window + timing.collect_slack
    if script is not None and script.kind is AttackKind.AUTHENTICATED_SPOOFING:
        device_start = script.start + window + 6.0
    else:
        device_start = 1.0
    if script is not None and script.kind is AttackKind.DEADLOCK_INJECTION:
        script = replace(script, start=max(script.start, device_start + window + 2.0))
    if duration is None:
        duration = device_start + 5 * window
    return net.run(script, duration, device_start=device_start)


@dataclass(frozen=True)
class Metrics:
    mitigation_rate: Optional[float]
    false_alarm_rate: Optional[float]
    n_attempts: int
    n_segments: int
    per_segment_decisions: dict = field(default_factory=dict)
    runtime: float = 0.0


def compute_metrics(outcomes: Sequence[ScenarioOutcome], runtime: float = 0.0) -> Metrics:
    """Mitigation rate over attack attempts, false alarms over legit segments.

    A rate with an empty denominator is reported as ``None``.
    """
    if not outcomes:
        raise ValueError("compute_metrics needs at least one outcome")
    attempts = [a for o in outcomes for a in o.attempts]
    legit = [d for o in outcomes for d in o.legit_decisions]
    counts = {label.value: sum(d.label is label for d in legit) for label in Label}
    return Metrics(
        mitigation_rate=sum(attempts) / len(attempts) if attempts else None,
        false_alarm_rate=counts[Label.OFF_BODY.value] / len(legit) if legit else None,
        n_attempts=len(attempts),
        n_segments=len(legit),
        per_segment_decisions=counts,
        runtime=runtime,
    )
