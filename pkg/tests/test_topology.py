"""Topology model and structural validation."""

import dataclasses

import numpy as np
import pytest
from conftest import cloud_node, device_node, fog_node, grid_topology, random_valid_topology

from foggrid import (
    DeviceRole,
    DeviceSpec,
    Mode,
    Node,
    Tier,
    default_cloud_spec,
    default_device_spec,
    default_fog_spec,
    make_topology,
    validate_topology,
)


def codes(topology):
    return {v.code for v in validate_topology(topology)}


class TestTierOrder:
    def test_total_order(self):
        assert Tier.DEVICE < Tier.FOG < Tier.CLOUD

    def test_three_values(self):
        assert len(Tier) == 3


class TestDefaultSpecs:
    def test_fog_spec(self):
        spec = default_fog_spec()
        assert spec.cpu_mhz == 500
        assert spec.cores == 2
        assert spec.memory_mb == 1024
        assert spec.power_active_mw == 199.0
        assert spec.power_idle_mw == 0.0

    def test_cloud_spec_power(self):
        assert default_cloud_spec().power_active_mw == 489.0

    def test_device_spec_positive(self):
        spec = default_device_spec()
        assert spec.cpu_mhz > 0 and spec.power_active_mw > 0


class TestValidation:
    def test_minimal_well_formed(self):
        t = make_topology(
            [
                cloud_node(),
                fog_node(1, area=1),
                device_node(2, area=1),
                device_node(3, area=1),
                device_node(4, area=1),
            ]
        )
        assert validate_topology(t) == []

    def test_orphan_area(self):
        t = make_topology(
            [cloud_node(), fog_node(1, area=1), device_node(2, area=2)]
        )
        assert "orphan area" in codes(t)

    def test_two_clouds(self):
        t = make_topology([cloud_node(0), cloud_node(1)])
        assert "cloud cardinality" in codes(t)

    def test_no_cloud(self):
        t = make_topology([fog_node(1, area=0)])
        assert "cloud cardinality" in codes(t)

    def test_cloud_only_mode_allows_empty_fog_tier(self):
        t = make_topology(
            [cloud_node(), device_node(1, area=0)], mode=Mode.CLOUD_ONLY
        )
        assert validate_topology(t) == []

    def test_fog_augmented_requires_fog_per_device_area(self):
        t = make_topology(
            [cloud_node(), device_node(1, area=0)], mode=Mode.FOG_AUGMENTED
        )
        assert "orphan area" in codes(t)

    def test_duplicate_id(self):
        t = make_topology(
            [cloud_node(), fog_node(1, area=0), fog_node(1, area=1)]
        )
        assert "duplicate id" in codes(t)

    def test_two_fogs_one_area(self):
        t = make_topology(
            [cloud_node(), fog_node(1, area=0), fog_node(2, area=0)]
        )
        assert "fog cardinality" in codes(t)

    def test_role_tier_mismatch(self):
        bad_fog = dataclasses.replace(fog_node(1, area=0), role=DeviceRole.SENSOR)
        t = make_topology([cloud_node(), bad_fog])
        assert "role tier mismatch" in codes(t)

    def test_cloud_with_area(self):
        bad_cloud = dataclasses.replace(cloud_node(), area=0)
        t = make_topology([bad_cloud])
        assert "cloud area" in codes(t)

    def test_missing_area(self):
        bad_fog = dataclasses.replace(fog_node(1, area=0), area=None)
        t = make_topology([cloud_node(), bad_fog])
        assert "missing area" in codes(t)

    def test_nonpositive_service_rate(self):
        bad = dataclasses.replace(fog_node(1, area=0), service_rate_per_s=0.0)
        t = make_topology([cloud_node(), bad])
        assert "service rate" in codes(t)

    def test_idle_above_active_power(self):
        spec = DeviceSpec(
            cpu_mhz=500, cores=2, memory_mb=1024,
            power_active_mw=100.0, power_idle_mw=200.0,
        )
        bad = dataclasses.replace(fog_node(1, area=0), spec=spec)
        t = make_topology([cloud_node(), bad])
        assert "spec power order" in codes(t)

    def test_self_link(self):
        t = make_topology(
            [cloud_node(), fog_node(1, area=0)], fog_links=((1, 1),)
        )
        assert "self link" in codes(t)

    def test_dangling_link(self):
        t = make_topology(
            [cloud_node(), fog_node(1, area=0)], fog_links=((1, 9),)
        )
        assert "dangling link" in codes(t)

    def test_link_between_non_fog_tiers(self):
        t = make_topology(
            [cloud_node(), fog_node(1, area=0), device_node(2, area=0)],
            fog_links=((1, 2),),
        )
        assert "link tier" in codes(t)

    def test_validation_is_pure(self):
        t = make_topology(
            [cloud_node(), fog_node(1, area=1), device_node(2, area=2)]
        )
        assert validate_topology(t) == validate_topology(t)

    def test_random_constructed_topologies_validate(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            assert validate_topology(random_valid_topology(rng)) == []


class TestMakeTopology:
    def test_infers_cloud_id(self):
        t = make_topology([fog_node(1, area=0), cloud_node(9)])
        assert t.cloud_id == 9

    def test_cloud_id_minus_one_without_unique_cloud(self):
        assert make_topology([fog_node(1, area=0)]).cloud_id == -1
        assert make_topology([cloud_node(0), cloud_node(1)]).cloud_id == -1

    def test_links_are_unordered(self):
        t = grid_topology(areas=2, links=((0, 1),))
        assert t.has_fog_link(1, 2)
        assert t.has_fog_link(2, 1)


class TestNode:
    def test_owner_account_default(self):
        assert device_node(7, area=0).owner_account() == "meter-7"

    def test_owner_account_explicit(self):
        node = device_node(7, area=0, account="acct-a")
        assert node.owner_account() == "acct-a"

    def test_fog_for_area(self):
        t = grid_topology(areas=2)
        assert t.fog_for_area(1).id == 2
        assert t.fog_for_area(5) is None

    def test_node_lookup_missing(self):
        t = grid_topology()
        with pytest.raises(KeyError):
            t.node(99)
