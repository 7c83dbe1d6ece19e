"""End-to-end engine flows: the worked conflict rows, threats, replay."""

from __future__ import annotations

import pytest

from homegate.engine import (
    Engine,
    EngineConfig,
    EngineError,
    PermissionDenied,
    UnknownEntity,
)
from homegate.enforcement import DeviceCommand, Origin, ThreatTag, Verb, VerdictKind
from homegate.model import (
    DeviceDescriptor,
    DeviceKind,
    DevicePolicy,
    UserRecord,
    ValueAttribute,
)
from homegate.store import Store, canonical_json

DAY = 86400


def set_temp(actor, value, origin=Origin.HOME):
    return DeviceCommand(actor=actor, device="thermostat_1", verb=Verb.SET_VALUE,
                         attribute="temperature", value=value, origin=origin)


def household(classes: dict[str, int], validity: dict[str, int] | None = None) -> Engine:
    engine = Engine()
    engine.bootstrap("owner")
    for user, cls in classes.items():
        engine.add_user(UserRecord(
            commander="owner", user=user, priority=cls,
            validity=(validity or {}).get(user)))
    return engine


def enforced_ranges(engine):
    out = {}
    for cid in engine.state.enforced:
        clause = engine.state.clauses[cid]
        cond = clause.condition_for("temperature")
        if cond is not None:
            out[cid] = (cond.low, cond.high)
    return out


# -- worked conflict rows -----------------------------------------------------------


def test_hpc_row_enforces_60_70():
    engine = household({"alice": 1, "bob": 2})
    engine.submit_policy_text("@alice\ndemand :: ~ : thermostat_1 : temperature in [60-70] ;")
    result = engine.submit_policy_text(
        "@bob\ndemand :: ~ : thermostat_1 : temperature in [75-80] ;")
    assert [r.conflict_class.value for r in result.reports] == ["HPC"]
    assert list(enforced_ranges(engine).values()) == [(60, 70)]
    assert engine.command(set_temp("bob", 78)).verdict is VerdictKind.DENY
    assert engine.command(set_temp("bob", 65)).allowed


def test_spc_row_enforces_then_merges_on_accept():
    engine = household({"alice": 1, "bob": 2})
    engine.submit_policy_text("@alice\ndemand :: ~ : thermostat_1 : temperature in [60-70] ;")
    result = engine.submit_policy_text(
        "@bob\ndemand :: ~ : thermostat_1 : temperature in [65-75] ;")
    assert [r.conflict_class.value for r in result.reports] == ["SPC"]
    assert list(enforced_ranges(engine).values()) == [(60, 70)]
    (sid,) = result.sessions
    session = engine.state.sessions[sid]
    assert session.parties == ("alice",)
    assert engine.command(set_temp("bob", 62)).allowed   # inside the standing 60-70

    engine.respond(sid, "alice", "accept")
    assert list(enforced_ranges(engine).values()) == [(65, 70)]
    assert engine.command(set_temp("bob", 62)).verdict is VerdictKind.DENY
    assert engine.command(set_temp("bob", 67)).allowed


def test_spc_reject_keeps_standing_clause():
    engine = household({"alice": 1, "bob": 2})
    engine.submit_policy_text("@alice\ndemand :: ~ : thermostat_1 : temperature in [60-70] ;")
    result = engine.submit_policy_text(
        "@bob\ndemand :: ~ : thermostat_1 : temperature in [65-75] ;")
    (sid,) = result.sessions
    engine.respond(sid, "alice", "reject")
    assert list(enforced_ranges(engine).values()) == [(60, 70)]


def test_hcc_row_proposal_agreement_installs_average():
    engine = household({"alice": 2, "bob": 2})
    engine.submit_policy_text("@alice\ndemand :: ~ : thermostat_1 : temperature in [60-70] ;")
    result = engine.submit_policy_text(
        "@bob\ndemand :: ~ : thermostat_1 : temperature in [75-80] ;")
    assert [r.conflict_class.value for r in result.reports] == ["HCC"]
    assert enforced_ranges(engine) == {}   # nothing installed while the offer is open
    (sid,) = result.sessions
    session = engine.state.sessions[sid]
    (cond,) = session.proposal
    assert (cond.low, cond.high) == (67, 75)

    engine.respond(sid, "alice", "accept")
    engine.respond(sid, "bob", "accept")
    assert list(enforced_ranges(engine).values()) == [(67, 75)]
    assert engine.command(set_temp("alice", 70)).allowed
    assert engine.command(set_temp("alice", 60)).verdict is VerdictKind.DENY


def test_hcc_row_rejection_escalates_to_admin():
    engine = household({"alice": 2, "bob": 2})
    engine.submit_policy_text("@alice\ndemand :: ~ : thermostat_1 : temperature in [60-70] ;")
    result = engine.submit_policy_text(
        "@bob\ndemand :: ~ : thermostat_1 : temperature in [75-80] ;")
    (sid,) = result.sessions
    engine.respond(sid, "alice", "accept")
    engine.respond(sid, "bob", "reject")
    assert enforced_ranges(engine) == {}
    messages = [n for n in engine.notifications() if n["recipient"] == "owner"]
    assert any("decide the policy" in n["message"] for n in messages)


def test_scc_row_installs_65_70():
    engine = household({"alice": 2, "bob": 2})
    engine.submit_policy_text("@alice\ndemand :: ~ : thermostat_1 : temperature in [60-70] ;")
    result = engine.submit_policy_text(
        "@bob\ndemand :: ~ : thermostat_1 : temperature in [65-75] ;")
    assert [r.conflict_class.value for r in result.reports] == ["SCC"]
    assert list(enforced_ranges(engine).values()) == [(65, 70)]


def test_rc_row_restriction_stands_and_notifies_bob():
    engine = household({"alice": 1, "bob": 2})
    engine.submit_device_policy(DevicePolicy(
        user="alice", device="thermostat_1", value_range=(60, 70), restricted="bob"))
    result = engine.submit_device_policy(DevicePolicy(
        user="bob", device="thermostat_1", value_range=(75, 80), restricted="0"))
    assert [r.conflict_class.value for r in result.reports] == ["RC"]
    assert any(n["recipient"] == "bob" and "restricted" in n["message"]
               for n in engine.notifications())
    decision = engine.command(set_temp("bob", 78))
    assert decision.verdict is VerdictKind.DENY
    assert decision.threat_tag is ThreatTag.T1
    assert engine.command(set_temp("bob", 65)).allowed


def test_temporary_access_row_gary_removed_and_denied():
    engine = household({"alice": 1})
    engine.add_user(UserRecord(commander="alice", user="gary", priority=4,
                               validity=2 * DAY))
    assert engine.state.users.has("gary")
    engine.advance_clock(by=2 * DAY + 1)
    assert not engine.state.users.has("gary")
    decision = engine.command(DeviceCommand(
        actor="gary", device="lock_1", verb=Verb.SWITCH, state="off"))
    assert decision.verdict is VerdictKind.DENY
    assert decision.threat_tag is ThreatTag.T4


def test_location_row_presence_switching():
    engine = household({"alice": 1, "kyle": 3})
    engine.submit_policy_text(
        "@alice\n"
        "demand :: ~ : thermostat_1 : temperature in [70-72], location in [Home] ;\n"
        "restrict :: kyle : thermostat_1 : location in [Away] ;\n")
    engine.submit_policy_text(
        "@kyle\ndemand :: ~ : thermostat_1 : temperature in [74-76] ;")

    engine.set_presence("alice", "Away")
    engine.set_presence("kyle", "Home")
    assert engine.command(set_temp("kyle", 75)).allowed

    engine.set_presence("alice", "Home")
    assert engine.command(set_temp("kyle", 75)).verdict is VerdictKind.DENY
    assert engine.command(set_temp("kyle", 71)).allowed

    engine.set_presence("kyle", "Away")
    remote = engine.command(set_temp("kyle", 75, origin=Origin.REMOTE))
    assert remote.verdict is VerdictKind.DENY


def test_binary_device_tie_escalates_via_majority_vote():
    engine = household({"alice": 2, "bob": 2})
    engine.submit_policy_text("@alice\ndemand :: ~ : lock_1 : state in [on] ;")
    result = engine.submit_policy_text("@bob\ndemand :: ~ : lock_1 : state in [off] ;")
    assert [r.conflict_class.value for r in result.reports] == ["HCC"]
    assert result.sessions == ()          # binary devices vote instead of proposing
    assert engine.state.enforced == []    # two voters tie: nothing stands
    assert any(n["recipient"] == "owner" and "tie" in n["message"]
               for n in engine.notifications())


def test_rejected_clauses_are_skipped_but_good_ones_integrate():
    engine = household({"alice": 1})
    result = engine.submit_policy_text(
        "@alice\n"
        "demand :: ~ : bulb_1 : level in [80-20] ;\n"     # inverted: rejected
        "demand :: ~ : bulb_2 : level in [20-80] ;\n")
    assert len(result.diagnostics) == 1
    assert [c.device for c in result.clauses] == ["bulb_2"]
    assert len(engine.state.enforced) == 1


# -- user management ------------------------------------------------------------------


def test_equal_rank_disagreement_blocks_until_resolution():
    engine = household({"ann": 1, "ben": 1})
    engine.add_user(UserRecord(commander="ann", user="kyle", priority=2))
    result = engine.add_user(UserRecord(commander="ben", user="kyle", priority=3))
    assert result.pending is not None
    assert not engine.state.users.has("kyle")
    assert engine.command(set_temp("kyle", 70)).verdict is VerdictKind.DENY

    engine.resolve_pending_user("kyle", 3, by="ann")
    assert engine.state.users.cls_of("kyle") == 3


def test_transitive_privilege_denied_with_t5():
    engine = household({"carl": 2})
    with pytest.raises(PermissionDenied) as err:
        engine.add_user(UserRecord(commander="carl", user="mallory", priority=0))
    assert err.value.tag is ThreatTag.T5
    assert any(n["tag"] == "T5" for n in engine.notifications())
    assert any(d["decision"]["verdict"] == "deny" for d in engine.state.decisions)


def test_remove_user_requires_authority():
    engine = household({"alice": 1, "bob": 2})
    with pytest.raises(PermissionDenied):
        engine.remove_user("alice", by="bob")
    engine.remove_user("bob", by="alice")
    assert not engine.state.users.has("bob")


def test_removing_user_purges_their_rules():
    engine = household({"alice": 1, "bob": 2})
    engine.submit_policy_text("@bob\ndemand :: ~ : bulb_1 : level in [10-50] ;")
    assert len(engine.state.enforced) == 1
    engine.remove_user("bob", by="alice")
    assert engine.state.enforced == []


# -- devices ---------------------------------------------------------------------------


def test_add_and_remove_device_permission_checked():
    engine = household({"guest": 2})
    new_device = DeviceDescriptor("bulb_9", DeviceKind.LIGHT, False,
                                  ValueAttribute("level", 0, 100, "%"))
    denied = engine.add_device(new_device, by="guest")
    assert denied.verdict is VerdictKind.DENY and denied.threat_tag is ThreatTag.T3
    allowed = engine.add_device(new_device, by="owner")
    assert allowed.allowed
    assert "bulb_9" in engine.state.devices

    engine.submit_policy_text("@owner\ndemand :: ~ : bulb_9 : level in [10-50] ;")
    assert len(engine.state.enforced) == 1
    removal = engine.remove_device("bulb_9", by="owner")
    assert removal.allowed
    assert "bulb_9" not in engine.state.devices
    assert engine.state.enforced == []


def test_unknown_lookups_raise_unknown_entity():
    engine = household({})
    with pytest.raises(UnknownEntity):
        engine.respond(99, "owner", "accept")
    with pytest.raises(UnknownEntity):
        engine.set_presence("ghost", "Home")
    with pytest.raises(UnknownEntity):
        engine.remove_device("ghost", by="owner")
    with pytest.raises(EngineError):
        engine.command(DeviceCommand(actor="owner", device="ghost", verb=Verb.SWITCH,
                                     state="on"))


# -- sessions expiring -------------------------------------------------------------------


def test_open_sessions_expire_by_escalating():
    engine = Engine(config=EngineConfig(session_ttl=3600))
    engine.bootstrap("owner")
    engine.add_user(UserRecord(commander="owner", user="alice", priority=2))
    engine.add_user(UserRecord(commander="owner", user="bob", priority=2))
    engine.submit_policy_text("@alice\ndemand :: ~ : thermostat_1 : temperature in [60-70] ;")
    result = engine.submit_policy_text(
        "@bob\ndemand :: ~ : thermostat_1 : temperature in [75-80] ;")
    (sid,) = result.sessions
    engine.advance_clock(by=3601)
    assert engine.state.sessions[sid].state.value == "escalated"
    assert any("expired" in n["message"] for n in engine.notifications()
               if n["recipient"] == "owner")


# -- event sourcing -----------------------------------------------------------------------


def eventful_run(tmp_path=None) -> Engine:
    engine = Engine(store=Store(tmp_path) if tmp_path else None)
    engine.bootstrap("owner")
    engine.add_user(UserRecord(commander="owner", user="alice", priority=1))
    engine.add_user(UserRecord(commander="owner", user="bob", priority=2))
    engine.add_user(UserRecord(commander="alice", user="gary", priority=4, validity=1000))
    engine.submit_policy_text("@alice\ndemand :: ~ : thermostat_1 : temperature in [60-70] ;")
    engine.submit_policy_text("@bob\ndemand :: ~ : thermostat_1 : temperature in [65-75] ;")
    engine.set_presence("alice", "Home")
    engine.command(set_temp("bob", 64))
    (session,) = [s for s in engine.state.sessions.values()]
    engine.respond(session.id, "alice", "accept")
    engine.command(set_temp("bob", 64))
    engine.advance_clock(by=2000)
    engine.command(DeviceCommand(actor="gary", device="lock_1", verb=Verb.SWITCH,
                                 state="on"))
    return engine


def test_replay_rebuilds_identical_state():
    live = eventful_run()
    replayed = Engine.replay(live.store.events())
    assert canonical_json(replayed.snapshot_doc()) == canonical_json(live.snapshot_doc())


def test_every_prefix_rebuilds_the_incremental_snapshot():
    # Folding the log one event at a time must pass through exactly the
    # states that replaying each prefix reconstructs.
    from homegate.engine import EngineState, apply_event

    live = eventful_run()
    events = live.store.events()
    incremental = EngineState()
    for cut, event in enumerate(events, start=1):
        apply_event(incremental, event.kind, event.payload)
        replayed = Engine.replay(events[:cut])
        assert canonical_json(replayed.snapshot_doc()) == \
            canonical_json(incremental.to_doc()), f"prefix {cut}"


def test_persisted_engine_resumes_from_disk(tmp_path):
    live = eventful_run(tmp_path)
    live.write_snapshot()
    resumed = Engine(store=Store(tmp_path))
    assert canonical_json(resumed.snapshot_doc()) == canonical_json(live.snapshot_doc())
    assert resumed.command(set_temp("bob", 67)).allowed


def test_decision_log_replay_reproduces_verdicts():
    live = eventful_run()
    replayed = Engine.replay(live.store.events())
    assert replayed.state.decisions == live.state.decisions
