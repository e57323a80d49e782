"""Deterministic discrete-event engine.

Messages are generated by Poisson arrival processes at device meters (or
directly at a fog/cloud node), traverse their tier-respecting route, and
queue at every fog/cloud hop, each modeled as an M/M/1 FIFO server.
Device hops forward instantly. Charging sessions ride the same network:
their request/approval messages queue like any other traffic, so protocol
latency reflects queue state.

Determinism contract: a run is a pure function of its RunConfig. Every
random draw comes from a generator derived from the master seed and a
stable purpose key, so adding a node or process never perturbs the streams
of existing ones. Events are processed in strict (time, seq) order, seq
assigned at scheduling time.

Trace digest: each processed event is rendered as the text line
``repr(time),seq,kind,node`` + newline, where ``kind`` is one of Arrival,
ServiceStart, ServiceEnd, SessionStep and ``repr`` is Python's shortest
round-trip float form; the digest is the 8-byte BLAKE2b hash of the
concatenated lines, in hex. (BLAKE2b-64 plays the role of the 64-bit trace
hash; it is pinned here so determinism is testable.)
"""

from __future__ import annotations

import hashlib
import heapq
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional

import numpy as np

from . import billing
from .billing import (
    BillRecord,
    ChargingSession,
    MeterIdentity,
    SessionState,
)
from .energy import BessState, EnergyLedger, MicrogridMode, accrue_energy, mode_transition
from .messages import (
    DEFAULT_CLASSIFICATION,
    IDENTITY_TOKEN,
    DataClass,
    Message,
    NoRoute,
    Payload,
    SealedEnvelope,
    UnknownNode,
    classify,
    resolve_route,
    seal,
)
from .queueing import QueueStats
from .topology import InvalidTopology, Mode, NodeId, Tier, Topology, validate_topology

_ARRIVAL = 0
_SERVICE_START = 1
_SERVICE_END = 2
_SESSION_STEP = 3
_KIND_NAMES = ("Arrival", "ServiceStart", "ServiceEnd", "SessionStep")

# Purpose codes for deriving per-(node, purpose) random streams.
_PURPOSE_SERVICE = 0
_PURPOSE_ARRIVAL = 1

_DIGEST_FLUSH = 4096


class EventKind(Enum):
    ARRIVAL = "Arrival"
    SERVICE_START = "ServiceStart"
    SERVICE_END = "ServiceEnd"
    SESSION_STEP = "SessionStep"


@dataclass(frozen=True)
class SimEvent:
    """One processed event, as recorded when event capture is on."""

    time: float
    seq: int
    kind: EventKind
    node: NodeId
    subject: Optional[int] = None


@dataclass(frozen=True)
class ArrivalProcess:
    """Poisson stream of payloads originating at ``target``.

    If ``target`` is a device meter, each message travels up to the node
    serving it (its fog gateway, or the cloud in cloud-only mode). If
    ``target`` is itself a fog or cloud node, messages enter its queue
    directly.
    """

    rate_per_s: float
    target: NodeId
    payload_kind: str
    size_bytes: int


@dataclass(frozen=True)
class SessionPlan:
    """A scheduled roaming-charge attempt."""

    vehicle_id: str
    outlet_meter: NodeId
    start_s: float
    energy_kwh: float
    duration_s: float = 0.0


@dataclass(frozen=True)
class BessChargeEntry:
    """Exogenous energy (e.g. solar) fed into the battery at a set time."""

    at_s: float
    energy_kwh: float


@dataclass(frozen=True)
class RunConfig:
    """Everything a run depends on. Identical configs give identical runs."""

    seed: int
    horizon_s: float
    warmup_s: float
    topology: Topology
    arrival_processes: tuple[ArrivalProcess, ...] = ()
    sessions: tuple[SessionPlan, ...] = ()
    vehicle_registry: Mapping[str, MeterIdentity] = field(default_factory=dict)
    classification: Mapping[str, DataClass] = field(
        default_factory=lambda: dict(DEFAULT_CLASSIFICATION)
    )
    tariff_per_kwh: float = 0.2
    bess: Optional[BessState] = None
    bess_charge_schedule: tuple[BessChargeEntry, ...] = ()
    grid_available: bool = True
    hop_delay_s: float = 0.0
    record_events: bool = False


@dataclass(frozen=True)
class SimTrace:
    """Digest (and optionally the full list) of the processed events."""

    digest: str
    event_count: int
    events: Optional[tuple[SimEvent, ...]] = None


@dataclass(frozen=True)
class SimResult:
    trace: SimTrace
    queue_stats: dict[NodeId, QueueStats]
    energy: dict[NodeId, EnergyLedger]
    sessions: tuple[ChargingSession, ...]
    bills: tuple[BillRecord, ...]
    #: per completed session: (from_bess_kwh, from_grid_kwh), keyed by session_id
    session_sources: dict[int, tuple[float, float]]
    messages_generated: int
    messages_delivered: int
    bytes_generated: int
    microgrid_mode: MicrogridMode
    bess_final: Optional[BessState]
    #: populated only when record_events is set
    messages: Optional[dict[int, Message]] = None


class _Transit:
    """A message in flight: its route and current position."""

    __slots__ = (
        "msg",
        "hops",
        "hop_idx",
        "node_arrival",
        "process_idx",
        "session_idx",
        "purpose",
    )

    def __init__(self, msg, hops, process_idx=None, session_idx=None, purpose=None):
        self.msg = msg
        self.hops = hops
        self.hop_idx = 0
        self.node_arrival = 0.0
        self.process_idx = process_idx
        self.session_idx = session_idx
        self.purpose = purpose


class _NodeState:
    """Queue and statistics accumulators for one fog/cloud server."""

    __slots__ = (
        "node_id",
        "service",
        "queue",
        "busy",
        "busy_since",
        "n",
        "last_t",
        "area_window",
        "busy_total",
        "busy_window",
        "arrivals_window",
        "sojourn_sum",
        "samples",
    )

    def __init__(self, node_id, service):
        self.node_id = node_id
        self.service = service
        self.queue = deque()
        self.busy = False
        self.busy_since = 0.0
        self.n = 0
        self.last_t = 0.0
        self.area_window = 0.0
        self.busy_total = 0.0
        self.busy_window = 0.0
        self.arrivals_window = 0
        self.sojourn_sum = 0.0
        self.samples = 0


def _stream(seed: int, purpose: int, *key: int) -> np.random.Generator:
    """Independent generator for (purpose, key), derived from the master
    seed. Streams never collide across distinct keys."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(purpose, *key))
    return np.random.Generator(np.random.PCG64(ss))


class _ExpStream:
    """Exponential sampler drawing from its generator in fixed blocks.

    Draws are always taken in blocks so the consumed stream is a pure
    function of the (seed, purpose, key) triple, independent of call
    pattern. Values are returned as plain floats; numpy scalars must not
    leak into heap keys (their repr differs and would change the digest).
    """

    __slots__ = ("rng", "scale", "buf", "idx")
    _BLOCK = 512

    def __init__(self, rng: np.random.Generator, rate: float):
        self.rng = rng
        self.scale = 1.0 / rate
        self.buf = None
        self.idx = 0

    def next(self) -> float:
        if self.buf is None or self.idx == self._BLOCK:
            self.buf = self.rng.exponential(self.scale, size=self._BLOCK)
            self.idx = 0
        v = self.buf[self.idx]
        self.idx += 1
        return float(v)


class _Engine:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        t = cfg.topology
        self.topo = t
        self.by_id = t.by_id()
        self.horizon = cfg.horizon_s
        self.warmup = cfg.warmup_s

        self.heap: list = []
        self.seq = 0
        self.hasher = hashlib.blake2b(digest_size=8)
        self.pending_lines: list[str] = []
        self.event_count = 0
        self.events: Optional[list[SimEvent]] = [] if cfg.record_events else None
        self.messages: Optional[dict[int, Message]] = (
            {} if cfg.record_events else None
        )

        self.msg_id = 0
        self.generated = 0
        self.delivered = 0
        self.bytes_gen = 0

        # Only fog/cloud nodes queue.
        self.servers: dict[NodeId, _NodeState] = {}
        for n in t.nodes:
            if n.tier is not Tier.DEVICE:
                self.servers[n.id] = _NodeState(
                    n.id,
                    _ExpStream(
                        _stream(cfg.seed, _PURPOSE_SERVICE, n.id),
                        n.service_rate_per_s,
                    ),
                )
        # Device-tier nodes only count messages handled.
        self.device_arrivals: dict[NodeId, int] = {
            n.id: 0 for n in t.nodes if n.tier is Tier.DEVICE
        }

        self.sessions: list[Optional[ChargingSession]] = [None] * len(cfg.sessions)
        self.session_sources: dict[int, tuple[float, float]] = {}
        self.bills: list[BillRecord] = []
        self.bess = cfg.bess
        self.bess_schedule = sorted(cfg.bess_charge_schedule, key=lambda e: e.at_s)
        self.bess_ptr = 0
        self.mode = mode_transition(
            MicrogridMode.GRID_CONNECTED, cfg.grid_available
        )

    # -- scheduling ---------------------------------------------------

    def _push(self, time: float, kind: int, node: NodeId, data=None) -> None:
        heapq.heappush(self.heap, (time, self.seq, kind, node, data))
        self.seq += 1

    def _record(self, time: float, seq: int, kind: int, node: NodeId, subject) -> None:
        self.pending_lines.append(f"{time!r},{seq},{_KIND_NAMES[kind]},{node}\n")
        if len(self.pending_lines) >= _DIGEST_FLUSH:
            self.hasher.update("".join(self.pending_lines).encode())
            self.pending_lines.clear()
        self.event_count += 1
        if self.events is not None:
            self.events.append(
                SimEvent(
                    time=time,
                    seq=seq,
                    kind=EventKind(_KIND_NAMES[kind]),
                    node=node,
                    subject=subject,
                )
            )

    # -- setup --------------------------------------------------------

    def _serving_node(self, device_id: NodeId) -> NodeId:
        node = self.by_id[device_id]
        if node.tier is not Tier.DEVICE:
            return node.id
        if self.topo.mode is Mode.CLOUD_ONLY:
            return self.topo.cloud_id
        fog = self.topo.fog_for_area(node.area)
        if fog is None:
            raise NoRoute(f"area {node.area} of device {device_id} has no fog node")
        return fog.id

    def _setup_processes(self) -> None:
        cfg = self.cfg
        self.proc_stream: list[Optional[_ExpStream]] = []
        self.proc_route: list[tuple[NodeId, ...]] = []
        self.proc_content: list = []
        self.proc_class: list[DataClass] = []
        per_node_index: dict[NodeId, int] = {}
        for proc in cfg.arrival_processes:
            if proc.target not in self.by_id:
                raise UnknownNode(
                    f"arrival process targets unknown node {proc.target}"
                )
            if proc.rate_per_s < 0:
                raise ValueError("arrival rate must be nonnegative")
            if proc.size_bytes <= 0:
                raise ValueError("message size must be positive")
            k = per_node_index.get(proc.target, 0)
            per_node_index[proc.target] = k + 1
            if proc.rate_per_s > 0:
                stream = _ExpStream(
                    _stream(cfg.seed, _PURPOSE_ARRIVAL, proc.target, k),
                    proc.rate_per_s,
                )
            else:
                stream = None
            serving = self._serving_node(proc.target)
            if serving == proc.target:
                hops: tuple[NodeId, ...] = (proc.target,)
            else:
                hops = resolve_route(proc.target, serving, self.topo).hops
            payload = Payload(kind=proc.payload_kind, bytes_size=proc.size_bytes)
            dclass = classify(payload, cfg.classification)
            if dclass is DataClass.PRIVATE:
                # Confidential between the originating meter and the cloud;
                # sealed once and shared by every message of the process.
                content = seal(
                    payload, {proc.target, self.topo.cloud_id}, self.topo
                )
            else:
                content = payload
            self.proc_stream.append(stream)
            self.proc_route.append(hops)
            self.proc_content.append(content)
            self.proc_class.append(dclass)

        for idx, stream in enumerate(self.proc_stream):
            if stream is not None:
                first = stream.next()
                if first <= self.horizon:
                    self._spawn_process_message(idx, first)

    def _spawn_process_message(self, idx: int, at: float) -> None:
        proc = self.cfg.arrival_processes[idx]
        msg = Message(
            id=self.msg_id,
            src=proc.target,
            dst=self.proc_route[idx][-1],
            data_class=self.proc_class[idx],
            content=self.proc_content[idx],
            created_at=at,
        )
        self.msg_id += 1
        transit = _Transit(msg, self.proc_route[idx], process_idx=idx)
        self._push(at, _ARRIVAL, transit.hops[0], transit)

    def _setup_sessions(self) -> None:
        for idx, plan in enumerate(self.cfg.sessions):
            node = self.by_id.get(plan.outlet_meter)
            if node is None or node.tier is not Tier.DEVICE:
                raise billing.UnknownOutlet(
                    f"session {idx}: outlet {plan.outlet_meter} is not a "
                    "device-tier node"
                )
            if plan.energy_kwh < 0:
                raise billing.NegativeEnergy(
                    f"session {idx}: energy_kwh must be nonnegative"
                )
            if plan.start_s <= self.horizon:
                self._push(
                    plan.start_s, _SESSION_STEP, plan.outlet_meter, (idx, "initiate")
                )

    # -- event handlers -----------------------------------------------

    def _integrate(self, st: _NodeState, now: float) -> None:
        if now > self.warmup and st.n:
            lo = st.last_t if st.last_t > self.warmup else self.warmup
            st.area_window += st.n * (now - lo)
        st.last_t = now

    def _handle_arrival(self, now: float, node: NodeId, transit: _Transit) -> None:
        if transit.process_idx is not None and transit.hop_idx == 0:
            self.generated += 1
            self.bytes_gen += self.cfg.arrival_processes[
                transit.process_idx
            ].size_bytes
            # Keep the Poisson stream flowing: draw the next generation.
            nxt = now + self.proc_stream[transit.process_idx].next()
            if nxt <= self.horizon:
                self._spawn_process_message(transit.process_idx, nxt)
        if self.messages is not None:
            self.messages.setdefault(transit.msg.id, transit.msg)

        st = self.servers.get(node)
        if st is None:
            # Device tier: zero queueing, forward or deliver immediately.
            if now >= self.warmup:
                self.device_arrivals[node] += 1
            if transit.hop_idx == len(transit.hops) - 1:
                self._deliver(now, node, transit)
            else:
                transit.hop_idx += 1
                self._push(
                    now + self.cfg.hop_delay_s,
                    _ARRIVAL,
                    transit.hops[transit.hop_idx],
                    transit,
                )
            return

        transit.node_arrival = now
        if now >= self.warmup:
            st.arrivals_window += 1
        self._integrate(st, now)
        st.n += 1
        st.queue.append(transit)
        if not st.busy:
            st.busy = True
            self._push(now, _SERVICE_START, node)

    def _handle_service_start(self, now: float, node: NodeId) -> None:
        st = self.servers[node]
        st.busy_since = now
        self._push(now + st.service.next(), _SERVICE_END, node)

    def _handle_service_end(self, now: float, node: NodeId) -> None:
        st = self.servers[node]
        transit = st.queue.popleft()
        self._integrate(st, now)
        st.n -= 1
        st.busy_total += now - st.busy_since
        lo = st.busy_since if st.busy_since > self.warmup else self.warmup
        if now > lo:
            st.busy_window += now - lo
        if transit.node_arrival >= self.warmup:
            st.samples += 1
            st.sojourn_sum += now - transit.node_arrival
        if st.queue:
            self._push(now, _SERVICE_START, node)
        else:
            st.busy = False

        if transit.hop_idx == len(transit.hops) - 1:
            self._deliver(now, node, transit)
        else:
            transit.hop_idx += 1
            self._push(
                now + self.cfg.hop_delay_s,
                _ARRIVAL,
                transit.hops[transit.hop_idx],
                transit,
            )

    def _deliver(self, now: float, node: NodeId, transit: _Transit) -> None:
        self.delivered += 1
        if transit.session_idx is not None:
            tag = (
                "request-delivered"
                if transit.purpose == "request"
                else "approval-delivered"
            )
            self._push(now, _SESSION_STEP, node, (transit.session_idx, tag))

    # -- session protocol ----------------------------------------------

    def _inject_session_message(
        self, now: float, idx: int, msg: Message, hops, purpose: str
    ) -> None:
        self.generated += 1
        inner = msg.content.inner if isinstance(msg.content, SealedEnvelope) else msg.content
        self.bytes_gen += inner.bytes_size
        transit = _Transit(msg, hops, session_idx=idx, purpose=purpose)
        self._push(now, _ARRIVAL, hops[0], transit)

    def _handle_session_step(self, now: float, node: NodeId, data) -> None:
        idx, tag = data
        plan = self.cfg.sessions[idx]
        if tag == "initiate":
            session = billing.initiate_session(
                idx,
                plan.vehicle_id,
                plan.outlet_meter,
                self.cfg.vehicle_registry,
                self.topo,
            )
            session, msg, route = billing.resolve_owner(
                session,
                self.cfg.vehicle_registry,
                self.topo,
                message_id=self.msg_id,
                at_s=now,
            )
            self.sessions[idx] = session
            if session.state is SessionState.REJECTED:
                return
            if msg is None:
                # Self-charge: no network round-trip needed.
                self._begin_charging(now, idx)
            else:
                self.msg_id += 1
                self._inject_session_message(now, idx, msg, route.hops, "request")
        elif tag == "request-delivered":
            session = self.sessions[idx]
            if session is None or session.state is not SessionState.OWNER_RESOLVED:
                return
            # Owner's meter answers with the identity confirmation; the
            # round-trip completes back at the outlet.
            reply_route = resolve_route(
                session.owner_meter, session.outlet_meter, self.topo
            )
            token = Payload(
                kind=IDENTITY_TOKEN,
                bytes_size=64,
                body={"vehicle_id": session.vehicle_id},
            )
            envelope = seal(
                token, {session.owner_meter, session.outlet_meter}, self.topo
            )
            msg = Message(
                id=self.msg_id,
                src=session.owner_meter,
                dst=session.outlet_meter,
                data_class=DataClass.PRIVATE,
                content=envelope,
                created_at=now,
            )
            self.msg_id += 1
            self._inject_session_message(now, idx, msg, reply_route.hops, "approval")
        elif tag == "approval-delivered":
            self._begin_charging(now, idx)
        elif tag == "charge-complete":
            self._complete_charge(now, idx)

    def _begin_charging(self, now: float, idx: int) -> None:
        session = self.sessions[idx]
        session = billing.authorize(session)
        session = billing.start_charging(session, now)
        self.sessions[idx] = session
        plan = self.cfg.sessions[idx]
        self._push(
            now + plan.duration_s,
            _SESSION_STEP,
            plan.outlet_meter,
            (idx, "charge-complete"),
        )

    def _apply_bess_schedule(self, now: float) -> None:
        while (
            self.bess_ptr < len(self.bess_schedule)
            and self.bess_schedule[self.bess_ptr].at_s <= now
        ):
            entry = self.bess_schedule[self.bess_ptr]
            self.bess_ptr += 1
            if self.bess is None:
                continue
            # Surplus beyond capacity is curtailed.
            stored = min(
                entry.energy_kwh * self.bess.efficiency,
                self.bess.capacity_kwh - self.bess.soc_kwh,
            )
            self.bess = replace(self.bess, soc_kwh=self.bess.soc_kwh + stored)

    def _complete_charge(self, now: float, idx: int) -> None:
        plan = self.cfg.sessions[idx]
        session = self.sessions[idx]
        self._apply_bess_schedule(now)
        energy = plan.energy_kwh
        from_bess = 0.0
        from_grid = 0.0
        if self.bess is not None and self.bess.soc_kwh >= energy:
            self.bess = replace(self.bess, soc_kwh=self.bess.soc_kwh - energy)
            from_bess = energy
        elif self.mode is MicrogridMode.GRID_CONNECTED:
            from_grid = energy
        else:
            # Islanded with a depleted battery: the outlet cannot deliver.
            self.sessions[idx] = billing.reject_session(
                session, "no energy source available in autonomous mode"
            )
            return
        session = billing.meter_energy(session, energy, at_s=now)
        session, bill = billing.settle_bill(
            session, self.cfg.tariff_per_kwh, self.cfg.vehicle_registry
        )
        self.sessions[idx] = session
        self.session_sources[session.session_id] = (from_bess, from_grid)
        self.bills.append(bill)

    # -- main loop ------------------------------------------------------

    def run(self) -> SimResult:
        cfg = self.cfg
        if not (cfg.horizon_s > 0):
            raise ValueError(f"horizon_s must be positive, got {cfg.horizon_s!r}")
        if not (0 <= cfg.warmup_s < cfg.horizon_s):
            raise ValueError(
                f"warmup_s must satisfy 0 <= warmup < horizon, got {cfg.warmup_s!r}"
            )
        if cfg.hop_delay_s < 0:
            raise ValueError("hop_delay_s must be nonnegative")
        violations = validate_topology(self.topo)
        if violations:
            raise InvalidTopology(violations)

        self._setup_processes()
        self._setup_sessions()

        heap = self.heap
        horizon = self.horizon
        handlers = (
            self._handle_arrival,
            self._handle_service_start,
            self._handle_service_end,
            self._handle_session_step,
        )
        while heap:
            time, seq, kind, node, data = heapq.heappop(heap)
            if time > horizon:
                break
            self._record(time, seq, kind, node, _subject_of(kind, data))
            if data is None:
                handlers[kind](time, node)
            else:
                handlers[kind](time, node, data)

        return self._finalize()

    def _finalize(self) -> SimResult:
        horizon = self.horizon
        window = horizon - self.warmup
        self._apply_bess_schedule(horizon)

        stats: dict[NodeId, QueueStats] = {}
        energy: dict[NodeId, EnergyLedger] = {}
        for node in sorted(self.by_id):
            tnode = self.by_id[node]
            st = self.servers.get(node)
            if st is None:
                stats[node] = QueueStats(
                    node=node,
                    lambda_hat=self.device_arrivals[node] / window,
                    mean_wait_s=0.0,
                    mean_in_system=0.0,
                    utilization=0.0,
                    samples=0,
                )
                energy[node] = accrue_energy(
                    EnergyLedger(node=node), tnode.spec, 0.0, horizon
                )
                continue
            # Close the integrals at the horizon.
            self._integrate(st, horizon)
            busy_total = st.busy_total
            busy_window = st.busy_window
            if st.busy:
                busy_total += horizon - st.busy_since
                lo = st.busy_since if st.busy_since > self.warmup else self.warmup
                if horizon > lo:
                    busy_window += horizon - lo
            stats[node] = QueueStats(
                node=node,
                lambda_hat=st.arrivals_window / window,
                mean_wait_s=st.sojourn_sum / st.samples if st.samples else 0.0,
                mean_in_system=st.area_window / window,
                utilization=busy_window / window,
                samples=st.samples,
            )
            energy[node] = accrue_energy(
                EnergyLedger(node=node),
                tnode.spec,
                busy_total,
                horizon - busy_total,
            )

        if self.pending_lines:
            self.hasher.update("".join(self.pending_lines).encode())
            self.pending_lines.clear()
        trace = SimTrace(
            digest=self.hasher.hexdigest(),
            event_count=self.event_count,
            events=tuple(self.events) if self.events is not None else None,
        )
        sessions = tuple(s for s in self.sessions if s is not None)
        return SimResult(
            trace=trace,
            queue_stats=stats,
            energy=energy,
            sessions=sessions,
            bills=tuple(self.bills),
            session_sources=dict(self.session_sources),
            messages_generated=self.generated,
            messages_delivered=self.delivered,
            bytes_generated=self.bytes_gen,
            microgrid_mode=self.mode,
            bess_final=self.bess,
            messages=self.messages,
        )


def _subject_of(kind: int, data) -> Optional[int]:
    if data is None:
        return None
    if kind == _SESSION_STEP:
        return data[0]
    return data.msg.id


def run(cfg: RunConfig) -> SimResult:
    """Execute one deterministic simulation run."""
    return _Engine(cfg).run()
