"""Scenario configuration files.

A scenario is one YAML document with four sections:

``run``
    seed (default 0), horizon_s (required), warmup_s (default 1% of the
    horizon).
``topology``
    mode (``fog-augmented`` default, or ``cloud-only``), nodes, fog_links.
    Each node: id, tier, plus optional role, area, service_rate_per_s,
    spec overrides, account.
``workload``
    arrival_processes, classification overrides, vehicle_registry,
    sessions. All optional.
``models``
    power_specs per tier, c_ms, bess, bess_charge_schedule,
    tariff_per_kwh, grid_available, hop_delay_s. All optional.

Parsing is total: malformed input of any shape produces a SchemaError
listing every problem with its config path, never a crash. Identifier
checks (DanglingReference) and structural topology checks
(InvalidTopology) run only once the schema is clean, so their messages
can assume well-typed fields.

YAML 1.1 quirk worth knowing: ``1e6`` reads as a string, not a float.
Write ``1000000`` or ``1.0e+6``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Optional

import yaml

from .billing import MeterIdentity
from .engine import ArrivalProcess, BessChargeEntry, RunConfig, SessionPlan
from .energy import BessState
from .errors import ConfigError
from .messages import DEFAULT_CLASSIFICATION, DataClass
from .topology import (
    DeviceRole,
    DeviceSpec,
    InvalidTopology,
    Mode,
    Node,
    Tier,
    default_cloud_spec,
    default_device_spec,
    default_fog_spec,
    make_topology,
    validate_topology,
)


class SchemaError(ConfigError):
    """A field is missing, mistyped, out of range, or unknown."""


class DanglingReference(ConfigError):
    """A workload entry references a node id the topology does not define
    (or defines with an unusable tier)."""


_TIERS = {t.name.lower(): t for t in Tier}
_ROLES = {r.value: r for r in DeviceRole}
_MODES = {m.value: m for m in Mode}
_CLASSES = {c.value: c for c in DataClass}

_DEFAULT_ROLE = {
    Tier.DEVICE: DeviceRole.SENSOR,
    Tier.FOG: DeviceRole.GATEWAY,
    Tier.CLOUD: DeviceRole.COMPUTING,
}

_DEFAULT_SPEC = {
    Tier.DEVICE: default_device_spec,
    Tier.FOG: default_fog_spec,
    Tier.CLOUD: default_cloud_spec,
}

_SPEC_KEYS = ("cpu_mhz", "cores", "memory_mb", "power_active_mw", "power_idle_mw")

#: Fraction of the horizon discarded as warmup when warmup_s is omitted.
DEFAULT_WARMUP_FRACTION = 0.01


@dataclass(frozen=True)
class ScenarioConfig:
    """A parsed, fully validated scenario.

    ``run_config`` is ready to hand to the engine. ``warmup_explicit``
    records whether warmup_s was stated in the file, so a later horizon
    override knows whether to rescale the default or keep the stated
    value.
    """

    run_config: RunConfig
    c_ms: float = 1.0
    warmup_explicit: bool = False


class _Reader:
    """Typed field access that collects problems instead of raising.

    Every accessor returns a usable placeholder on failure so validation
    can continue and report all problems in one pass.
    """

    def __init__(self) -> None:
        self.problems: list[str] = []

    def fail(self, path: str, msg: str) -> None:
        self.problems.append(f"{path}: {msg}")

    def mapping(self, value: Any, path: str) -> dict:
        if value is None:
            return {}
        if not isinstance(value, dict):
            self.fail(path, f"expected a mapping, got {type(value).__name__}")
            return {}
        return value

    def sequence(self, value: Any, path: str) -> list:
        if value is None:
            return []
        if not isinstance(value, list):
            self.fail(path, f"expected a list, got {type(value).__name__}")
            return []
        return value

    def known_keys(self, m: dict, path: str, allowed: tuple[str, ...]) -> None:
        for key in m:
            if key not in allowed:
                self.fail(f"{path}.{key}", "unknown key")

    def _get(self, m: dict, key: str, path: str, required: bool, default):
        if key not in m or m[key] is None:
            if required:
                self.fail(f"{path}.{key}", "required field is missing")
            return default
        return m[key]

    def int_field(
        self, m, key, path, required=True, default=0, minimum=None
    ) -> int:
        v = self._get(m, key, path, required, default)
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(f"{path}.{key}", f"expected an integer, got {v!r}")
            return default
        if minimum is not None and v < minimum:
            self.fail(f"{path}.{key}", f"must be >= {minimum}, got {v}")
            return default
        return v

    def float_field(
        self, m, key, path, required=True, default=0.0, minimum=None, exclusive=False
    ) -> float:
        v = self._get(m, key, path, required, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(f"{path}.{key}", f"expected a number, got {v!r}")
            return default
        v = float(v)
        if minimum is not None:
            if exclusive and v <= minimum:
                self.fail(f"{path}.{key}", f"must be > {minimum}, got {v}")
                return default
            if not exclusive and v < minimum:
                self.fail(f"{path}.{key}", f"must be >= {minimum}, got {v}")
                return default
        return v

    def str_field(self, m, key, path, required=True, default="") -> str:
        v = self._get(m, key, path, required, default)
        if not isinstance(v, str):
            self.fail(f"{path}.{key}", f"expected a string, got {v!r}")
            return default
        return v

    def bool_field(self, m, key, path, required=True, default=False) -> bool:
        v = self._get(m, key, path, required, default)
        if not isinstance(v, bool):
            self.fail(f"{path}.{key}", f"expected true/false, got {v!r}")
            return default
        return v

    def choice(self, m, key, path, table, required=True, default=None):
        if key not in m or m[key] is None:
            if required:
                self.fail(f"{path}.{key}", "required field is missing")
            return default
        v = m[key]
        if not isinstance(v, str) or v not in table:
            options = ", ".join(sorted(table))
            self.fail(f"{path}.{key}", f"expected one of [{options}], got {v!r}")
            return default
        return table[v]


def _read_spec(r: _Reader, raw: Any, path: str, base: DeviceSpec) -> DeviceSpec:
    """Partial spec mapping merged over ``base``."""
    m = r.mapping(raw, path)
    r.known_keys(m, path, _SPEC_KEYS)
    return DeviceSpec(
        cpu_mhz=r.int_field(m, "cpu_mhz", path, False, base.cpu_mhz, minimum=1),
        cores=r.int_field(m, "cores", path, False, base.cores, minimum=1),
        memory_mb=r.int_field(m, "memory_mb", path, False, base.memory_mb, minimum=1),
        power_active_mw=r.float_field(
            m, "power_active_mw", path, False, base.power_active_mw, 0.0, True
        ),
        power_idle_mw=r.float_field(
            m, "power_idle_mw", path, False, base.power_idle_mw, 0.0
        ),
    )


def _read_node(r: _Reader, raw: Any, path: str, tier_specs) -> Optional[Node]:
    m = r.mapping(raw, path)
    if not m:
        r.fail(path, "node entry must be a mapping")
        return None
    r.known_keys(
        m, path, ("id", "tier", "role", "area", "service_rate_per_s", "spec", "account")
    )
    node_id = r.int_field(m, "id", path, minimum=0)
    tier = r.choice(m, "tier", path, _TIERS)
    if tier is None:
        return None
    role = r.choice(m, "role", path, _ROLES, False, _DEFAULT_ROLE[tier])
    area = None
    if "area" in m and m["area"] is not None:
        area = r.int_field(m, "area", path, minimum=0)
    rate = r.float_field(m, "service_rate_per_s", path, False, 1.0, 0.0, True)
    spec = tier_specs[tier]
    if "spec" in m and m["spec"] is not None:
        spec = _read_spec(r, m["spec"], f"{path}.spec", spec)
    account = None
    if "account" in m and m["account"] is not None:
        account = r.str_field(m, "account", path)
    return Node(
        id=node_id,
        tier=tier,
        role=role,
        spec=spec,
        service_rate_per_s=rate,
        area=area,
        account=account,
    )


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document.

    Raises SchemaError, DanglingReference, or InvalidTopology; each lists
    every problem found at its stage.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = (
            f"line {mark.line + 1}, column {mark.column + 1}"
            if mark is not None
            else "document"
        )
        detail = getattr(exc, "problem", None) or str(exc)
        raise SchemaError([f"{where}: invalid YAML ({detail})"]) from None
    return _build(doc)


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SchemaError([f"cannot read config file: {exc}"]) from None
    return parse_config(text)


def _build(doc: Any) -> ScenarioConfig:
    r = _Reader()
    root = r.mapping(doc, "config")
    if not root:
        raise SchemaError(["config: document must be a non-empty mapping"])
    r.known_keys(root, "config", ("run", "topology", "workload", "models"))

    # -- run section ----------------------------------------------------
    run = r.mapping(root.get("run"), "run")
    if "run" not in root:
        r.fail("run", "required section is missing")
    r.known_keys(run, "run", ("seed", "horizon_s", "warmup_s"))
    seed = r.int_field(run, "seed", "run", False, 0, minimum=0)
    if seed >= 2**64:
        r.fail("run.seed", "must fit in 64 bits")
        seed = 0
    horizon = r.float_field(run, "horizon_s", "run", True, 1.0, 0.0, True)
    warmup_explicit = "warmup_s" in run and run["warmup_s"] is not None
    if warmup_explicit:
        warmup = r.float_field(run, "warmup_s", "run", True, 0.0, 0.0)
        if warmup >= horizon:
            r.fail("run.warmup_s", f"must be < horizon_s, got {warmup}")
            warmup = 0.0
    else:
        warmup = DEFAULT_WARMUP_FRACTION * horizon

    # -- models section ---------------------------------------------------
    models = r.mapping(root.get("models"), "models")
    r.known_keys(
        models,
        "models",
        (
            "power_specs",
            "c_ms",
            "bess",
            "bess_charge_schedule",
            "tariff_per_kwh",
            "grid_available",
            "hop_delay_s",
        ),
    )
    tier_specs = {tier: make() for tier, make in _DEFAULT_SPEC.items()}
    power_specs = r.mapping(models.get("power_specs"), "models.power_specs")
    r.known_keys(power_specs, "models.power_specs", tuple(_TIERS))
    for name, tier in _TIERS.items():
        if name in power_specs:
            tier_specs[tier] = _read_spec(
                r, power_specs[name], f"models.power_specs.{name}", tier_specs[tier]
            )
    c_ms = r.float_field(models, "c_ms", "models", False, 1.0, 0.0, True)
    bess = None
    if "bess" in models and models["bess"] is not None:
        bm = r.mapping(models["bess"], "models.bess")
        r.known_keys(bm, "models.bess", ("capacity_kwh", "soc_kwh", "efficiency"))
        capacity = r.float_field(bm, "capacity_kwh", "models.bess", True, 1.0, 0.0, True)
        soc = r.float_field(bm, "soc_kwh", "models.bess", False, 0.0, 0.0)
        eff = r.float_field(bm, "efficiency", "models.bess", False, 1.0, 0.0, True)
        if eff > 1.0:
            r.fail("models.bess.efficiency", f"must be <= 1, got {eff}")
            eff = 1.0
        if soc > capacity:
            r.fail("models.bess.soc_kwh", "must not exceed capacity_kwh")
            soc = capacity
        bess = BessState(capacity_kwh=capacity, soc_kwh=soc, efficiency=eff)
    schedule = []
    for i, raw in enumerate(
        r.sequence(models.get("bess_charge_schedule"), "models.bess_charge_schedule")
    ):
        path = f"models.bess_charge_schedule[{i}]"
        em = r.mapping(raw, path)
        r.known_keys(em, path, ("at_s", "energy_kwh"))
        schedule.append(
            BessChargeEntry(
                at_s=r.float_field(em, "at_s", path, True, 0.0, 0.0),
                energy_kwh=r.float_field(em, "energy_kwh", path, True, 0.0, 0.0),
            )
        )
    tariff = r.float_field(models, "tariff_per_kwh", "models", False, 0.2, 0.0, True)
    grid_available = r.bool_field(models, "grid_available", "models", False, True)
    hop_delay = r.float_field(models, "hop_delay_s", "models", False, 0.0, 0.0)

    # -- topology section -------------------------------------------------
    topo_m = r.mapping(root.get("topology"), "topology")
    if "topology" not in root:
        r.fail("topology", "required section is missing")
    r.known_keys(topo_m, "topology", ("mode", "nodes", "fog_links"))
    mode = r.choice(topo_m, "mode", "topology", _MODES, False, Mode.FOG_AUGMENTED)
    raw_nodes = r.sequence(topo_m.get("nodes"), "topology.nodes")
    if not raw_nodes:
        r.fail("topology.nodes", "at least one node is required")
    nodes = []
    for i, raw in enumerate(raw_nodes):
        node = _read_node(r, raw, f"topology.nodes[{i}]", tier_specs)
        if node is not None:
            nodes.append(node)
    links = []
    for i, raw in enumerate(r.sequence(topo_m.get("fog_links"), "topology.fog_links")):
        path = f"topology.fog_links[{i}]"
        if (
            not isinstance(raw, list)
            or len(raw) != 2
            or any(isinstance(v, bool) or not isinstance(v, int) for v in raw)
        ):
            r.fail(path, f"expected a pair of node ids, got {raw!r}")
            continue
        links.append((raw[0], raw[1]))

    # -- workload section ---------------------------------------------------
    workload = r.mapping(root.get("workload"), "workload")
    r.known_keys(
        workload,
        "workload",
        ("arrival_processes", "classification", "vehicle_registry", "sessions"),
    )
    classification = dict(DEFAULT_CLASSIFICATION)
    class_m = r.mapping(workload.get("classification"), "workload.classification")
    for kind, raw in class_m.items():
        if not isinstance(kind, str):
            r.fail("workload.classification", f"kind {kind!r} must be a string")
            continue
        cls = r.choice(
            class_m, kind, "workload.classification", _CLASSES, True, None
        )
        if cls is not None:
            classification[kind] = cls

    processes = []
    for i, raw in enumerate(
        r.sequence(workload.get("arrival_processes"), "workload.arrival_processes")
    ):
        path = f"workload.arrival_processes[{i}]"
        pm = r.mapping(raw, path)
        r.known_keys(pm, path, ("rate_per_s", "target", "payload_kind", "size_bytes"))
        kind = r.str_field(pm, "payload_kind", path)
        if kind and kind not in classification:
            r.fail(f"{path}.payload_kind", f"{kind!r} has no classification entry")
        processes.append(
            ArrivalProcess(
                rate_per_s=r.float_field(pm, "rate_per_s", path, True, 0.0, 0.0),
                target=r.int_field(pm, "target", path, minimum=0),
                payload_kind=kind,
                size_bytes=r.int_field(pm, "size_bytes", path, False, 256, minimum=1),
            )
        )

    registry = {}
    reg_m = r.mapping(workload.get("vehicle_registry"), "workload.vehicle_registry")
    for vehicle, raw in reg_m.items():
        path = f"workload.vehicle_registry.{vehicle}"
        if not isinstance(vehicle, str):
            r.fail("workload.vehicle_registry", f"vehicle id {vehicle!r} must be a string")
            continue
        vm = r.mapping(raw, path)
        r.known_keys(vm, path, ("meter", "account"))
        meter = r.int_field(vm, "meter", path, minimum=0)
        account = None
        if "account" in vm and vm["account"] is not None:
            account = r.str_field(vm, "account", path)
        registry[vehicle] = (meter, account)

    sessions = []
    for i, raw in enumerate(r.sequence(workload.get("sessions"), "workload.sessions")):
        path = f"workload.sessions[{i}]"
        sm = r.mapping(raw, path)
        r.known_keys(
            sm, path, ("vehicle_id", "outlet_meter", "start_s", "energy_kwh", "duration_s")
        )
        sessions.append(
            SessionPlan(
                vehicle_id=r.str_field(sm, "vehicle_id", path),
                outlet_meter=r.int_field(sm, "outlet_meter", path, minimum=0),
                start_s=r.float_field(sm, "start_s", path, True, 0.0, 0.0),
                energy_kwh=r.float_field(sm, "energy_kwh", path, True, 0.0, 0.0),
                duration_s=r.float_field(sm, "duration_s", path, False, 0.0, 0.0),
            )
        )

    if r.problems:
        raise SchemaError(r.problems)

    # -- reference stage ---------------------------------------------------
    by_id = {n.id: n for n in nodes}
    dangling: list[str] = []
    for i, proc in enumerate(processes):
        if proc.target not in by_id:
            dangling.append(
                f"workload.arrival_processes[{i}].target: "
                f"node {proc.target} is not defined"
            )
    resolved_registry = {}
    for vehicle, (meter, account) in registry.items():
        path = f"workload.vehicle_registry.{vehicle}.meter"
        node = by_id.get(meter)
        if node is None:
            dangling.append(f"{path}: node {meter} is not defined")
        elif node.tier is not Tier.DEVICE:
            dangling.append(f"{path}: node {meter} is not a device-tier meter")
        else:
            resolved_registry[vehicle] = MeterIdentity(
                meter=meter,
                owner_account=account if account is not None else node.owner_account(),
            )
    for i, plan in enumerate(sessions):
        path = f"workload.sessions[{i}].outlet_meter"
        node = by_id.get(plan.outlet_meter)
        if node is None:
            dangling.append(f"{path}: node {plan.outlet_meter} is not defined")
        elif node.tier is not Tier.DEVICE:
            dangling.append(
                f"{path}: node {plan.outlet_meter} is not a device-tier meter"
            )
    for i, (a, b) in enumerate(links):
        for end in (a, b):
            if end not in by_id:
                dangling.append(
                    f"topology.fog_links[{i}]: node {end} is not defined"
                )
    if dangling:
        raise DanglingReference(dangling)

    # -- topology stage ------------------------------------------------------
    topology = make_topology(nodes, links, mode)
    violations = validate_topology(topology)
    if violations:
        raise InvalidTopology(violations)

    run_config = RunConfig(
        seed=seed,
        horizon_s=horizon,
        warmup_s=warmup,
        topology=topology,
        arrival_processes=tuple(processes),
        sessions=tuple(sessions),
        vehicle_registry=resolved_registry,
        classification=classification,
        tariff_per_kwh=tariff,
        bess=bess,
        bess_charge_schedule=tuple(schedule),
        grid_available=grid_available,
        hop_delay_s=hop_delay,
    )
    return ScenarioConfig(
        run_config=run_config, c_ms=c_ms, warmup_explicit=warmup_explicit
    )


def with_mode(sc: ScenarioConfig, mode: Mode) -> ScenarioConfig:
    """The same scenario with the topology mode forced.

    The flipped topology must still validate (a fog-augmented run needs a
    fog node in every device area, which a cloud-only authored config may
    lack).
    """
    topo = replace(sc.run_config.topology, mode=mode)
    violations = validate_topology(topo)
    if violations:
        raise InvalidTopology(violations)
    return replace(sc, run_config=replace(sc.run_config, topology=topo))


def with_overrides(
    sc: ScenarioConfig,
    seed: Optional[int] = None,
    horizon_s: Optional[float] = None,
) -> ScenarioConfig:
    """Apply command-line overrides on top of a parsed scenario.

    A horizon override rescales a defaulted warmup; an explicitly
    configured warmup is kept and re-checked against the new horizon.
    """
    rc = sc.run_config
    if seed is not None:
        if seed < 0 or seed >= 2**64:
            raise SchemaError([f"seed override: must fit in 64 bits, got {seed}"])
        rc = replace(rc, seed=seed)
    if horizon_s is not None:
        if horizon_s <= 0:
            raise SchemaError(
                [f"horizon override: must be > 0, got {horizon_s}"]
            )
        if sc.warmup_explicit:
            if rc.warmup_s >= horizon_s:
                raise SchemaError(
                    [
                        "horizon override: configured warmup_s "
                        f"{rc.warmup_s} does not fit under horizon {horizon_s}"
                    ]
                )
            rc = replace(rc, horizon_s=horizon_s)
        else:
            rc = replace(
                rc,
                horizon_s=horizon_s,
                warmup_s=DEFAULT_WARMUP_FRACTION * horizon_s,
            )
    return replace(sc, run_config=rc)
