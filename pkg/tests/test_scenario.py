"""Scenario file parsing: schema, references, topology, and overrides."""

import textwrap

import pytest

from foggrid import (
    DEFAULT_WARMUP_FRACTION,
    BessState,
    DanglingReference,
    DataClass,
    DeviceRole,
    InvalidTopology,
    Mode,
    SchemaError,
    Tier,
    load_config,
    parse_config,
    with_mode,
    with_overrides,
)

MINIMAL = textwrap.dedent(
    """
    run:
      horizon_s: 1000.0
    topology:
      nodes:
        - {id: 0, tier: cloud}
        - {id: 1, tier: fog, area: 0}
        - {id: 2, tier: device, area: 0}
    """
)

FULL = textwrap.dedent(
    """
    run:
      seed: 42
      horizon_s: 5000.0
      warmup_s: 250.0
    topology:
      mode: fog-augmented
      nodes:
        - {id: 0, tier: cloud, service_rate_per_s: 2.0}
        - id: 1
          tier: fog
          area: 0
          service_rate_per_s: 0.5
          spec: {power_active_mw: 250.0}
        - {id: 2, tier: fog, area: 1}
        - {id: 3, tier: device, area: 0, account: acct-three}
        - {id: 4, tier: device, area: 0}
        - {id: 5, tier: device, area: 1, role: actuator}
      fog_links:
        - [1, 2]
    workload:
      arrival_processes:
        - {rate_per_s: 0.01, target: 3, payload_kind: MeterReading}
        - {rate_per_s: 0.02, target: 5, payload_kind: GridTelemetry, size_bytes: 64}
      classification:
        CustomKind: public
      vehicle_registry:
        ev-a: {meter: 3}
        ev-b: {meter: 5, account: acct-override}
      sessions:
        - {vehicle_id: ev-a, outlet_meter: 5, start_s: 10.0, energy_kwh: 2.0, duration_s: 60.0}
    models:
      c_ms: 2.5
      tariff_per_kwh: 0.3
      hop_delay_s: 0.1
      grid_available: false
      bess: {capacity_kwh: 20.0, soc_kwh: 5.0, efficiency: 0.9}
      bess_charge_schedule:
        - {at_s: 100.0, energy_kwh: 1.0}
      power_specs:
        fog: {power_idle_mw: 10.0}
    """
)


def problems_of(excinfo):
    return excinfo.value.problems


class TestDefaults:
    def test_minimal_config(self):
        sc = parse_config(MINIMAL)
        rc = sc.run_config
        assert rc.seed == 0
        assert rc.horizon_s == 1000.0
        assert rc.warmup_s == DEFAULT_WARMUP_FRACTION * 1000.0
        assert sc.warmup_explicit is False
        assert rc.topology.mode is Mode.FOG_AUGMENTED
        assert rc.tariff_per_kwh == 0.2
        assert rc.grid_available is True
        assert rc.hop_delay_s == 0.0
        assert rc.bess is None
        assert rc.arrival_processes == ()
        assert rc.sessions == ()
        assert sc.c_ms == 1.0

    def test_tier_defaults(self):
        rc = parse_config(MINIMAL).run_config
        cloud, fog, device = rc.topology.nodes
        assert cloud.role is DeviceRole.COMPUTING
        assert fog.role is DeviceRole.GATEWAY
        assert device.role is DeviceRole.SENSOR
        assert fog.spec.power_active_mw == 199.0
        assert cloud.spec.power_active_mw == 489.0
        assert fog.service_rate_per_s == 1.0


class TestFullConfig:
    def test_everything_lands(self):
        sc = parse_config(FULL)
        rc = sc.run_config
        assert rc.seed == 42
        assert rc.warmup_s == 250.0
        assert sc.warmup_explicit is True
        assert sc.c_ms == 2.5
        assert rc.tariff_per_kwh == 0.3
        assert rc.hop_delay_s == 0.1
        assert rc.grid_available is False
        assert rc.bess == BessState(capacity_kwh=20.0, soc_kwh=5.0, efficiency=0.9)
        assert len(rc.bess_charge_schedule) == 1
        assert rc.topology.has_fog_link(1, 2)

    def test_spec_override_merges_over_default(self):
        rc = parse_config(FULL).run_config
        fog1 = rc.topology.node(1)
        assert fog1.spec.power_active_mw == 250.0
        assert fog1.spec.cpu_mhz == 500  # untouched default
        fog2 = rc.topology.node(2)
        assert fog2.spec.power_active_mw == 199.0
        # models.power_specs.fog changes the tier default for both fogs
        assert fog1.spec.power_idle_mw == 10.0
        assert fog2.spec.power_idle_mw == 10.0

    def test_arrival_process_defaults(self):
        rc = parse_config(FULL).run_config
        assert rc.arrival_processes[0].size_bytes == 256
        assert rc.arrival_processes[1].size_bytes == 64

    def test_classification_merge(self):
        rc = parse_config(FULL).run_config
        assert rc.classification["CustomKind"] is DataClass.PUBLIC
        assert rc.classification["MeterReading"] is DataClass.PRIVATE

    def test_registry_account_resolution(self):
        rc = parse_config(FULL).run_config
        assert rc.vehicle_registry["ev-a"].owner_account == "acct-three"
        assert rc.vehicle_registry["ev-b"].owner_account == "acct-override"

    def test_registry_meter_name_fallback(self):
        text = MINIMAL + textwrap.dedent(
            """
            workload:
              vehicle_registry:
                ev-x: {meter: 2}
            """
        )
        rc = parse_config(text).run_config
        assert rc.vehicle_registry["ev-x"].owner_account == "meter-2"


class TestSchemaErrors:
    def test_malformed_yaml_reports_position(self):
        with pytest.raises(SchemaError) as exc:
            parse_config("run: [1, 2\n")
        (problem,) = problems_of(exc)
        assert "invalid YAML" in problem
        assert "line" in problem

    def test_empty_document(self):
        with pytest.raises(SchemaError):
            parse_config("")

    def test_scientific_notation_string_trap(self):
        # YAML 1.1 reads 1e6 as a string; the error message must surface
        # the field rather than silently misparse.
        with pytest.raises(SchemaError) as exc:
            parse_config("run: {horizon_s: 1e6}\ntopology:\n  nodes:\n    - {id: 0, tier: cloud}\n")
        assert any("run.horizon_s" in p for p in problems_of(exc))

    def test_all_problems_reported_at_once(self):
        text = textwrap.dedent(
            """
            run:
              seed: -1
            topology:
              nodes:
                - {id: 0, tier: nebula}
            surprise: 1
            """
        )
        with pytest.raises(SchemaError) as exc:
            parse_config(text)
        problems = problems_of(exc)
        assert any("run.seed" in p for p in problems)
        assert any("run.horizon_s" in p for p in problems)
        assert any("tier" in p for p in problems)
        assert any("surprise" in p for p in problems)

    def test_missing_sections(self):
        with pytest.raises(SchemaError) as exc:
            parse_config("models: {}\n")
        problems = problems_of(exc)
        assert any(p.startswith("run:") for p in problems)
        assert any(p.startswith("topology:") for p in problems)

    def test_boolean_is_not_a_number(self):
        with pytest.raises(SchemaError) as exc:
            parse_config(MINIMAL.replace("horizon_s: 1000.0", "horizon_s: true"))
        assert any("run.horizon_s" in p for p in problems_of(exc))

    def test_warmup_must_fit_under_horizon(self):
        text = MINIMAL.replace("horizon_s: 1000.0", "horizon_s: 1000.0\n  warmup_s: 1000.0")
        with pytest.raises(SchemaError) as exc:
            parse_config(text)
        assert any("warmup_s" in p for p in problems_of(exc))

    def test_seed_width(self):
        text = MINIMAL.replace("horizon_s: 1000.0", f"horizon_s: 1000.0\n  seed: {2**64}")
        with pytest.raises(SchemaError) as exc:
            parse_config(text)
        assert any("64 bits" in p for p in problems_of(exc))

    def test_bess_bounds(self):
        text = MINIMAL + "models:\n  bess: {capacity_kwh: 5.0, soc_kwh: 6.0}\n"
        with pytest.raises(SchemaError) as exc:
            parse_config(text)
        assert any("soc_kwh" in p for p in problems_of(exc))

        text = MINIMAL + "models:\n  bess: {capacity_kwh: 5.0, efficiency: 1.5}\n"
        with pytest.raises(SchemaError) as exc:
            parse_config(text)
        assert any("efficiency" in p for p in problems_of(exc))

    def test_unclassified_payload_kind(self):
        text = MINIMAL + textwrap.dedent(
            """
            workload:
              arrival_processes:
                - {rate_per_s: 0.1, target: 2, payload_kind: Mystery}
            """
        )
        with pytest.raises(SchemaError) as exc:
            parse_config(text)
        assert any("no classification entry" in p for p in problems_of(exc))

    def test_bad_classification_value(self):
        text = MINIMAL + "workload:\n  classification: {Foo: secret}\n"
        with pytest.raises(SchemaError) as exc:
            parse_config(text)
        assert any("expected one of" in p for p in problems_of(exc))

    def test_malformed_fog_link(self):
        text = MINIMAL.replace(
            "topology:", "topology:\n  fog_links:\n    - [1]"
        )
        with pytest.raises(SchemaError) as exc:
            parse_config(text)
        assert any("pair" in p for p in problems_of(exc))


class TestDanglingReferences:
    def test_arrival_target(self):
        text = MINIMAL + textwrap.dedent(
            """
            workload:
              arrival_processes:
                - {rate_per_s: 0.1, target: 99, payload_kind: GridTelemetry}
            """
        )
        with pytest.raises(DanglingReference) as exc:
            parse_config(text)
        assert any("node 99 is not defined" in p for p in problems_of(exc))

    def test_registry_meter_undefined(self):
        text = MINIMAL + "workload:\n  vehicle_registry:\n    ev: {meter: 99}\n"
        with pytest.raises(DanglingReference):
            parse_config(text)

    def test_registry_meter_must_be_device_tier(self):
        text = MINIMAL + "workload:\n  vehicle_registry:\n    ev: {meter: 1}\n"
        with pytest.raises(DanglingReference) as exc:
            parse_config(text)
        assert any("not a device-tier meter" in p for p in problems_of(exc))

    def test_session_outlet(self):
        text = MINIMAL + textwrap.dedent(
            """
            workload:
              sessions:
                - {vehicle_id: ev, outlet_meter: 0, start_s: 1.0, energy_kwh: 1.0}
            """
        )
        with pytest.raises(DanglingReference):
            parse_config(text)

    def test_fog_link_endpoint(self):
        text = MINIMAL.replace(
            "topology:", "topology:\n  fog_links:\n    - [1, 7]"
        )
        with pytest.raises(DanglingReference) as exc:
            parse_config(text)
        assert any("fog_links[0]" in p for p in problems_of(exc))


class TestTopologyStage:
    def test_missing_cloud(self):
        text = textwrap.dedent(
            """
            run: {horizon_s: 100.0}
            topology:
              nodes:
                - {id: 1, tier: fog, area: 0}
                - {id: 2, tier: device, area: 0}
            """
        )
        with pytest.raises(InvalidTopology) as exc:
            parse_config(text)
        assert any(v.code == "cloud cardinality" for v in exc.value.violations)

    def test_orphan_device_area(self):
        text = textwrap.dedent(
            """
            run: {horizon_s: 100.0}
            topology:
              nodes:
                - {id: 0, tier: cloud}
                - {id: 2, tier: device, area: 3}
            """
        )
        with pytest.raises(InvalidTopology) as exc:
            parse_config(text)
        assert any(v.code == "orphan area" for v in exc.value.violations)


class TestOverrides:
    def test_seed_override(self):
        sc = with_overrides(parse_config(MINIMAL), seed=77)
        assert sc.run_config.seed == 77

    def test_horizon_override_rescales_default_warmup(self):
        sc = with_overrides(parse_config(MINIMAL), horizon_s=50_000.0)
        assert sc.run_config.horizon_s == 50_000.0
        assert sc.run_config.warmup_s == DEFAULT_WARMUP_FRACTION * 50_000.0

    def test_horizon_override_keeps_explicit_warmup(self):
        sc = with_overrides(parse_config(FULL), horizon_s=9_000.0)
        assert sc.run_config.horizon_s == 9_000.0
        assert sc.run_config.warmup_s == 250.0

    def test_horizon_override_rechecks_explicit_warmup(self):
        with pytest.raises(SchemaError):
            with_overrides(parse_config(FULL), horizon_s=100.0)

    def test_bad_override_values(self):
        sc = parse_config(MINIMAL)
        with pytest.raises(SchemaError):
            with_overrides(sc, seed=-1)
        with pytest.raises(SchemaError):
            with_overrides(sc, seed=2**64)
        with pytest.raises(SchemaError):
            with_overrides(sc, horizon_s=0.0)

    def test_no_overrides_is_identity(self):
        sc = parse_config(MINIMAL)
        assert with_overrides(sc) == sc


class TestWithMode:
    def test_flip_to_cloud_only(self):
        sc = with_mode(parse_config(MINIMAL), Mode.CLOUD_ONLY)
        assert sc.run_config.topology.mode is Mode.CLOUD_ONLY

    def test_flip_back(self):
        sc = with_mode(
            with_mode(parse_config(MINIMAL), Mode.CLOUD_ONLY), Mode.FOG_AUGMENTED
        )
        assert sc.run_config.topology == parse_config(MINIMAL).run_config.topology

    def test_fogless_config_cannot_become_fog_augmented(self):
        text = textwrap.dedent(
            """
            run: {horizon_s: 100.0}
            topology:
              mode: cloud-only
              nodes:
                - {id: 0, tier: cloud}
                - {id: 2, tier: device, area: 0}
            """
        )
        sc = parse_config(text)
        with pytest.raises(InvalidTopology):
            with_mode(sc, Mode.FOG_AUGMENTED)


class TestLoadConfig:
    def test_missing_file(self, tmp_path):
        with pytest.raises(SchemaError) as exc:
            load_config(tmp_path / "nope.yaml")
        assert any("cannot read config file" in p for p in problems_of(exc))

    def test_round_trip_through_file(self, tmp_path):
        path = tmp_path / "scenario.yaml"
        path.write_text(MINIMAL, encoding="utf-8")
        assert load_config(path) == parse_config(MINIMAL)
