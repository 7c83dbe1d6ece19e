"""Model types: normalization, device-policy compilation, regions."""

from __future__ import annotations

import itertools
import random

import pytest

from homegate.model import (
    Action,
    ConditionOp,
    DevicePolicy,
    DomainRegistry,
    IntervalDomain,
    IntervalRegion,
    ModelError,
    PolicyClause,
    SUBJECT_ALL,
    TokenRegion,
    allowed_region,
    clause_from_device_policy,
    normalize,
    standard_devices,
)
from homegate.policy_lang import parse_policy_set

from conftest import clause, cond_in, cond_notin, make_table
from oracles import condition_value_set, random_condition


def ids(start=1):
    return itertools.count(start)


def parse_one(text: str):
    clauses, diags = parse_policy_set(text)
    assert diags == []
    assert len(clauses) == 1
    return clauses[0]


# -- normalize -----------------------------------------------------------------


def test_location_clause_becomes_presence_gated_demand():
    table = make_table(U1=0, U3=3)
    ast = parse_one("@U1\nlocation :: U3 : bulb_3 : location in [Home] ;")
    (c,) = normalize(ast, 0, table, ids())
    assert c.owners == ("U1",)
    assert c.subject == "U3"
    assert c.device == "bulb_3"
    assert c.action is Action.DEMAND
    (cond,) = c.conditions
    assert cond.attribute == "location" and cond.user == "U3"
    assert cond.members == frozenset({"Home"})


def test_location_clause_without_condition_gets_home_presence():
    table = make_table(U1=0, U3=3)
    ast = parse_one("@U1\nlocation :: U3 : bulb_3 : ~ ;")
    (c,) = normalize(ast, 0, table, ids())
    (cond,) = c.conditions
    assert cond.attribute == "location" and cond.members == frozenset({"Home"})


def test_cartesian_expansion_two_targets_two_devices():
    table = make_table(U1=0, U2=1, U3=2)
    ast = parse_one("@U1\ndemand :: U2, U3 : bulb_1, bulb_2 : ~ ;")
    out = normalize(ast, 0, table, ids())
    assert len(out) == 4
    assert {(c.subject, c.device) for c in out} == {
        ("U2", "bulb_1"), ("U2", "bulb_2"), ("U3", "bulb_1"), ("U3", "bulb_2")}


def test_all_target_keeps_symbolic_subject():
    table = make_table(U1=0)
    ast = parse_one("@U1\nrestrict :: ~ : thermostat_1 : temperature notin [60-70] ;")
    (c,) = normalize(ast, 0, table, ids())
    assert c.subject == SUBJECT_ALL
    assert c.action is Action.RESTRICT


def test_normalize_unknown_owner_rejected():
    ast = parse_one("@ghost\ndemand :: ~ : bulb_1 : ~ ;")
    with pytest.raises(ModelError):
        normalize(ast, 0, make_table(U1=0), ids())


def test_normalize_idempotent_in_effect():
    from homegate.policy_lang import render_clause

    table = make_table(U1=0, U3=3)
    ast = parse_one("@U1\ndemand :: U3 : bulb_1 : temperature in [60-70] ;")
    first = normalize(ast, 0, table, ids())
    again = normalize(parse_one(f"@U1\n{render_clause(ast)}"), 0, table, ids(100))
    strip = lambda c: (c.owners, c.subject, c.device, c.conditions, c.action)
    assert [strip(c) for c in first] == [strip(c) for c in again]


# -- clause_from_device_policy ---------------------------------------------------


def test_general_value_policy_becomes_all_users_demand():
    dp = DevicePolicy(user="alice", device="thermostat_1",
                      value_range=(68, 70), restricted="0")
    c = clause_from_device_policy(dp, ids())
    assert c.action is Action.DEMAND
    assert c.subject == SUBJECT_ALL
    assert c.conditions == (cond_in("temperature", 68, 70),)


def test_restricted_time_policy_fires_outside_window():
    dp = DevicePolicy(user="alice", device="lock_1",
                      time_window=(6 * 60, 21 * 60), restricted="gary")
    c = clause_from_device_policy(dp, ids())
    assert c.action is Action.RESTRICT
    assert c.subject == "gary"
    (cond,) = c.conditions
    assert cond.op is ConditionOp.WINDOW_NOT
    assert (cond.low, cond.high) == (6 * 60, 21 * 60)


def test_empty_device_policy_rejected():
    with pytest.raises(ModelError):
        clause_from_device_policy(DevicePolicy(user="a", device="d"), ids())


def test_cross_construction_equality_with_parsed_clause():
    table = make_table(alice=0)
    dp = DevicePolicy(user="alice", device="thermostat_1",
                      value_range=(68, 70), restricted="0")
    from_array = clause_from_device_policy(dp, ids())
    ast = parse_one("@alice\ndemand :: ~ : thermostat_1 : temperature in [68-70] ;")
    (from_text,) = normalize(ast, 0, table, ids(100))
    strip = lambda c: (c.owners, c.subject, c.device, c.conditions, c.action)
    assert strip(from_array) == strip(from_text)


# -- allowed_region ---------------------------------------------------------------


def test_allowed_region_direct_read():
    c = clause("alice", conditions=(cond_in("temperature", 60, 70),))
    region = allowed_region(c, "temperature", IntervalDomain(50, 90)).region
    assert region == IntervalRegion(((60, 70),))


def test_allowed_region_unconstrained_is_full_domain():
    c = clause("alice")
    region = allowed_region(c, "temperature", IntervalDomain(50, 90)).region
    assert region == IntervalRegion(((50, 90),))


def test_allowed_region_closed_exclusion():
    # Frozen from the membership-scan oracle: [50,90] minus [60,70].
    c = clause("alice", conditions=(cond_notin("temperature", 60, 70),))
    region = allowed_region(c, "temperature", IntervalDomain(50, 90)).region
    assert region == IntervalRegion(((50, 59), (71, 90)))
    oracle = condition_value_set(c.conditions[0], DomainRegistry())
    assert frozenset(region.values()) == oracle


def test_region_always_within_domain_and_matches_oracle():
    rng = random.Random(42)
    domains = DomainRegistry()
    for _ in range(200):
        attr = rng.choice(["temperature", "level", "time", "location"])
        cond = random_condition(rng, attr)
        domain = domains.domain_for(attr)
        region = cond.region_over(domain)
        expected = condition_value_set(cond, domains)
        if isinstance(region, TokenRegion):
            assert region.members == expected
            assert region.members <= domain.tokens
        else:
            values = frozenset(region.values())
            assert values == expected
            assert all(domain.low <= v <= domain.high for v in values)


# -- invariants --------------------------------------------------------------------


def test_duplicate_condition_attribute_rejected():
    with pytest.raises(ModelError):
        PolicyClause(
            id=1, owners=("a",), subject=SUBJECT_ALL, device="d",
            conditions=(cond_in("temperature", 60, 70), cond_in("temperature", 75, 80)),
            action=Action.DEMAND,
        )


def test_interval_region_canonicalization_merges_adjacent():
    region = IntervalRegion.canonical([(60, 70), (71, 80), (50, 55)])
    assert region == IntervalRegion(((50, 55), (60, 80)))


def test_clause_doc_round_trip():
    c = clause("alice", conditions=(cond_notin("temperature", 60, 70),))
    assert PolicyClause.from_doc(c.to_doc()) == c


def test_standard_devices_roster():
    roster = standard_devices()
    assert len(roster) == 16
    kinds = {d.kind.value for d in roster}
    assert kinds == {"thermostat", "lock", "light", "camera", "sensor"}
    thermo = next(d for d in roster if d.id == "thermostat_1")
    assert thermo.value_attribute.low == 50 and thermo.value_attribute.high == 90
