"""Tiered network data model: devices, fog gateways, and the cloud.

A topology is a static description of the network the simulator runs on.
Device-tier nodes (smart meters, sensors, EV outlets) belong to fog areas;
each area is served by exactly one fog gateway when fog mode is enabled;
a single cloud node sits at the top. Values are immutable after
construction and validated by :func:`validate_topology`, which reports
violations as data rather than raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Optional

from .errors import FogGridError

NodeId = int
FogAreaId = int


class InvalidTopology(FogGridError):
    """A topology failed validation; carries the violation report."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__(
            "; ".join(str(v) for v in self.violations) or "invalid topology"
        )


class Tier(IntEnum):
    """Network tier. The numeric order (device < fog < cloud) is what
    route monotonicity checks rely on."""

    DEVICE = 0
    FOG = 1
    CLOUD = 2


class DeviceRole(Enum):
    CONNECTING = "connecting"
    GATEWAY = "gateway"
    SENSOR = "sensor"
    ACTUATOR = "actuator"
    COMPUTING = "computing"


class Mode(Enum):
    CLOUD_ONLY = "cloud-only"
    FOG_AUGMENTED = "fog-augmented"


#: Roles a fog-tier node may carry.
FOG_ROLES = frozenset({DeviceRole.GATEWAY, DeviceRole.COMPUTING})
#: Roles a device-tier node may carry.
DEVICE_ROLES = frozenset(
    {DeviceRole.SENSOR, DeviceRole.ACTUATOR, DeviceRole.CONNECTING}
)


@dataclass(frozen=True)
class DeviceSpec:
    """Hardware description of a node: CPU, memory, and power draw."""

    cpu_mhz: int
    cores: int
    memory_mb: int
    power_active_mw: float
    power_idle_mw: float = 0.0


def default_fog_spec() -> DeviceSpec:
    """Default fog-node hardware: a 500 MHz dual-core gateway board with
    1024 MB of memory, drawing 199 mW when active.

    The board also carries 4 GB of flash storage, which the simulator does
    not model. Idle power defaults to 0 mW; it is a config knob.
    """
    return DeviceSpec(
        cpu_mhz=500,
        cores=2,
        memory_mb=1024,
        power_active_mw=199.0,
        power_idle_mw=0.0,
    )


def default_cloud_spec() -> DeviceSpec:
    """Default cloud-server hardware, drawing 489 mW when active.

    Only the active power figure is meaningful to the simulator; the CPU
    and memory numbers are descriptive placeholders for a backend server.
    """
    return DeviceSpec(
        cpu_mhz=3000,
        cores=16,
        memory_mb=65536,
        power_active_mw=489.0,
        power_idle_mw=0.0,
    )


def default_device_spec() -> DeviceSpec:
    """Default device-tier hardware: a 100 MHz microcontroller-class node.

    Devices never serve traffic, so their power figures only matter when a
    scenario turns on idle power accounting.
    """
    return DeviceSpec(
        cpu_mhz=100,
        cores=1,
        memory_mb=64,
        power_active_mw=1.0,
        power_idle_mw=0.0,
    )


@dataclass(frozen=True)
class Node:
    """One network node.

    ``area`` is required on device and fog tiers, and must be absent on
    the cloud node. ``service_rate_per_s`` is the M/M/1 service rate used
    when this node queues traffic (fog and cloud tiers only, but every
    node carries a positive rate).
    """

    id: NodeId
    tier: Tier
    role: DeviceRole
    spec: DeviceSpec
    service_rate_per_s: float = 1.0
    area: Optional[FogAreaId] = None
    account: Optional[str] = None

    def owner_account(self) -> str:
        """Billing account of the party owning this node (device tier)."""
        return self.account if self.account is not None else f"meter-{self.id}"


@dataclass(frozen=True)
class Topology:
    """A validated-or-not snapshot of the whole network."""

    nodes: tuple[Node, ...]
    fog_links: frozenset[frozenset[NodeId]] = field(default_factory=frozenset)
    mode: Mode = Mode.FOG_AUGMENTED
    cloud_id: NodeId = -1

    def node(self, node_id: NodeId) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(f"no node with id {node_id}")

    def by_id(self) -> dict[NodeId, Node]:
        return {n.id: n for n in self.nodes}

    def fog_nodes(self) -> list[Node]:
        return [n for n in self.nodes if n.tier is Tier.FOG]

    def device_nodes(self) -> list[Node]:
        return [n for n in self.nodes if n.tier is Tier.DEVICE]

    def fog_for_area(self, area: FogAreaId) -> Optional[Node]:
        """The fog gateway serving ``area``, or None if the area has none."""
        for n in self.nodes:
            if n.tier is Tier.FOG and n.area == area:
                return n
        return None

    def has_fog_link(self, a: NodeId, b: NodeId) -> bool:
        return frozenset((a, b)) in self.fog_links


def make_topology(
    nodes,
    fog_links=(),
    mode: Mode = Mode.FOG_AUGMENTED,
) -> Topology:
    """Build a Topology, inferring cloud_id from the (single) cloud node.

    If the cloud count is not exactly one, cloud_id is set to -1 and
    validate_topology will report the cardinality violation.
    """
    nodes = tuple(nodes)
    clouds = [n.id for n in nodes if n.tier is Tier.CLOUD]
    cloud_id = clouds[0] if len(clouds) == 1 else -1
    links = frozenset(frozenset(pair) for pair in fog_links)
    return Topology(nodes=nodes, fog_links=links, mode=mode, cloud_id=cloud_id)


@dataclass(frozen=True)
class Violation:
    """One broken invariant, with enough identifiers to locate it."""

    code: str
    detail: str

    def __str__(self) -> str:
        return f"{self.code}: {self.detail}"


def _check_spec(node: Node, report: list[Violation]) -> None:
    s = node.spec
    numeric = {
        "cpu_mhz": s.cpu_mhz,
        "cores": s.cores,
        "memory_mb": s.memory_mb,
        "power_active_mw": s.power_active_mw,
        "power_idle_mw": s.power_idle_mw,
    }
    for name, value in numeric.items():
        if not math.isfinite(value):
            report.append(
                Violation("spec non-finite", f"node {node.id}: {name}={value!r}")
            )
    for name in ("cpu_mhz", "cores", "memory_mb", "power_active_mw"):
        if numeric[name] <= 0:
            report.append(
                Violation(
                    "spec sign", f"node {node.id}: {name} must be positive"
                )
            )
    if s.power_idle_mw < 0:
        report.append(
            Violation("spec sign", f"node {node.id}: power_idle_mw must be >= 0")
        )
    if s.power_idle_mw > s.power_active_mw:
        report.append(
            Violation(
                "spec power order",
                f"node {node.id}: power_idle_mw {s.power_idle_mw} exceeds "
                f"power_active_mw {s.power_active_mw}",
            )
        )


def validate_topology(t: Topology) -> list[Violation]:
    """Check every structural invariant of ``t``.

    Returns one Violation per problem; an empty list means the topology is
    well-formed. Pure: identical inputs yield identical reports.
    """
    report: list[Violation] = []

    seen: set[NodeId] = set()
    for n in t.nodes:
        if n.id in seen:
            report.append(Violation("duplicate id", f"node id {n.id} repeats"))
        seen.add(n.id)
        if n.id < 0:
            report.append(Violation("negative id", f"node id {n.id}"))

    clouds = [n for n in t.nodes if n.tier is Tier.CLOUD]
    if len(clouds) != 1:
        report.append(
            Violation(
                "cloud cardinality",
                f"expected exactly one cloud node, found {len(clouds)} "
                f"({[n.id for n in clouds]})",
            )
        )
    elif t.cloud_id != clouds[0].id:
        report.append(
            Violation(
                "cloud id mismatch",
                f"cloud_id {t.cloud_id} does not name the cloud node "
                f"{clouds[0].id}",
            )
        )

    for n in t.nodes:
        if n.tier is Tier.FOG and n.role not in FOG_ROLES:
            report.append(
                Violation(
                    "role tier mismatch",
                    f"fog node {n.id} has role {n.role.value}; expected "
                    "gateway or computing",
                )
            )
        if n.tier is Tier.DEVICE and n.role not in DEVICE_ROLES:
            report.append(
                Violation(
                    "role tier mismatch",
                    f"device node {n.id} has role {n.role.value}; expected "
                    "sensor, actuator, or connecting",
                )
            )
        if n.tier is Tier.CLOUD and n.area is not None:
            report.append(
                Violation("cloud area", f"cloud node {n.id} must not have an area")
            )
        if n.tier is not Tier.CLOUD and n.area is None:
            report.append(
                Violation(
                    "missing area", f"{n.tier.name.lower()} node {n.id} has no area"
                )
            )
        if not (n.service_rate_per_s > 0) or not math.isfinite(n.service_rate_per_s):
            report.append(
                Violation(
                    "service rate",
                    f"node {n.id}: service_rate_per_s must be positive and "
                    f"finite, got {n.service_rate_per_s!r}",
                )
            )
        _check_spec(n, report)

    fog_by_area: dict[FogAreaId, list[NodeId]] = {}
    for n in t.nodes:
        if n.tier is Tier.FOG and n.area is not None:
            fog_by_area.setdefault(n.area, []).append(n.id)
    for area, ids in sorted(fog_by_area.items()):
        if len(ids) > 1:
            report.append(
                Violation(
                    "fog cardinality",
                    f"area {area} has {len(ids)} fog nodes ({ids}); expected one",
                )
            )

    if t.mode is Mode.FOG_AUGMENTED:
        for n in t.nodes:
            if n.tier is Tier.DEVICE and n.area is not None:
                if n.area not in fog_by_area:
                    report.append(
                        Violation(
                            "orphan area",
                            f"device {n.id} is in area {n.area}, which has "
                            "no fog node",
                        )
                    )

    by_id = {n.id: n for n in t.nodes}
    for link in sorted(t.fog_links, key=sorted):
        ids = sorted(link)
        if len(ids) != 2:
            report.append(Violation("self link", f"fog link {ids} joins a node to itself"))
            continue
        a, b = ids
        for end in (a, b):
            if end not in by_id:
                report.append(
                    Violation("dangling link", f"fog link ({a}, {b}) references unknown node {end}")
                )
            elif by_id[end].tier is not Tier.FOG:
                report.append(
                    Violation(
                        "link tier",
                        f"fog link ({a}, {b}) endpoint {end} is "
                        f"{by_id[end].tier.name.lower()}-tier, not fog",
                    )
                )

    return report
