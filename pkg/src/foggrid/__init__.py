"""foggrid: a deterministic simulator of a fog-augmented smart grid.

The package models a three-tier network (device meters, fog gateways,
one cloud), routes messages along tier-respecting paths, queues them at
fog/cloud servers as M/M/1 stations, keeps private payloads sealed from
the fog tier, runs an EV roaming-billing protocol over the same network,
and accounts energy per node. Scenarios are YAML files; the ``foggrid``
CLI runs them and emits CSV reports, including a cloud-only versus
fog-augmented comparison of the same workload.
"""

from .billing import (
    BillRecord,
    ChargingSession,
    InvalidState,
    MeterIdentity,
    NegativeEnergy,
    NonpositiveTariff,
    SessionState,
    UnknownOutlet,
    authorize,
    initiate_session,
    is_legal_transition,
    meter_energy,
    reject_session,
    resolve_owner,
    settle_bill,
    start_charging,
)
from .energy import (
    BessState,
    EnergyLedger,
    MicrogridMode,
    NegativeDuration,
    NonpositiveN,
    OverCapacity,
    ProcessingModel,
    Underflow,
    accrue_energy,
    bess_charge,
    bess_discharge,
    mode_transition,
    processing_time,
)
from .engine import (
    ArrivalProcess,
    BessChargeEntry,
    EventKind,
    RunConfig,
    SessionPlan,
    SimEvent,
    SimResult,
    SimTrace,
    run,
)
from .errors import ConfigError, FogGridError
from .messages import (
    BILLING_RECORD,
    CHARGE_REQUEST,
    DEFAULT_CLASSIFICATION,
    GRID_TELEMETRY,
    IDENTITY_TOKEN,
    METER_READING,
    DataClass,
    EmptyKeyholders,
    FogKeyholderForbidden,
    Message,
    NoRoute,
    NotKeyholder,
    Payload,
    Route,
    RoutePattern,
    SealedEnvelope,
    UnknownKind,
    UnknownNode,
    classify,
    classify_route_pattern,
    open_envelope,
    resolve_route,
    seal,
)
from .queueing import (
    MM1Metrics,
    NonpositiveTarget,
    QueueStats,
    Unstable,
    calibrate_service_rate,
    littles_law_residual,
    mm1_analytic,
)
from .reporting import (
    NODES_HEADER,
    SESSIONS_HEADER,
    Comparison,
    IoFailure,
    NodeRow,
    RunReport,
    SessionRow,
    build_report,
    compare_frameworks,
    emit_comparison,
    emit_report,
)
from .scenario import (
    DEFAULT_WARMUP_FRACTION,
    DanglingReference,
    ScenarioConfig,
    SchemaError,
    load_config,
    parse_config,
    with_mode,
    with_overrides,
)
from .topology import (
    DeviceRole,
    DeviceSpec,
    InvalidTopology,
    Mode,
    Node,
    Tier,
    Topology,
    Violation,
    default_cloud_spec,
    default_device_spec,
    default_fog_spec,
    make_topology,
    validate_topology,
)

__version__ = "0.1.0"

__all__ = [
    "ArrivalProcess",
    "BILLING_RECORD",
    "BessChargeEntry",
    "BessState",
    "BillRecord",
    "CHARGE_REQUEST",
    "ChargingSession",
    "Comparison",
    "ConfigError",
    "DEFAULT_CLASSIFICATION",
    "DEFAULT_WARMUP_FRACTION",
    "DanglingReference",
    "DataClass",
    "DeviceRole",
    "DeviceSpec",
    "EmptyKeyholders",
    "EnergyLedger",
    "EventKind",
    "FogGridError",
    "FogKeyholderForbidden",
    "GRID_TELEMETRY",
    "IDENTITY_TOKEN",
    "InvalidState",
    "InvalidTopology",
    "IoFailure",
    "METER_READING",
    "MM1Metrics",
    "Message",
    "MeterIdentity",
    "MicrogridMode",
    "Mode",
    "NODES_HEADER",
    "NegativeDuration",
    "NegativeEnergy",
    "Node",
    "NodeRow",
    "NonpositiveN",
    "NonpositiveTarget",
    "NonpositiveTariff",
    "NoRoute",
    "NotKeyholder",
    "OverCapacity",
    "Payload",
    "ProcessingModel",
    "QueueStats",
    "Route",
    "RoutePattern",
    "RunConfig",
    "RunReport",
    "SESSIONS_HEADER",
    "ScenarioConfig",
    "SchemaError",
    "SealedEnvelope",
    "SessionPlan",
    "SessionRow",
    "SessionState",
    "SimEvent",
    "SimResult",
    "SimTrace",
    "Tier",
    "Topology",
    "Underflow",
    "UnknownKind",
    "UnknownNode",
    "UnknownOutlet",
    "Unstable",
    "Violation",
    "accrue_energy",
    "authorize",
    "bess_charge",
    "bess_discharge",
    "build_report",
    "calibrate_service_rate",
    "classify",
    "classify_route_pattern",
    "compare_frameworks",
    "default_cloud_spec",
    "default_device_spec",
    "default_fog_spec",
    "emit_comparison",
    "emit_report",
    "initiate_session",
    "is_legal_transition",
    "littles_law_residual",
    "load_config",
    "make_topology",
    "meter_energy",
    "mm1_analytic",
    "mode_transition",
    "open_envelope",
    "parse_config",
    "processing_time",
    "reject_session",
    "resolve_owner",
    "resolve_route",
    "run",
    "seal",
    "settle_bill",
    "start_charging",
    "validate_topology",
    "with_mode",
    "with_overrides",
]
