"""The seven priority-assignment rules and authority queries."""

from __future__ import annotations

import pytest

from homegate.model import UserRecord
from homegate.priority import (
    AlreadyBootstrapped,
    AssignAboveOwnAuthority,
    CommanderExpired,
    DevicePermEscalation,
    UnknownCommander,
    add_user,
    bootstrap,
    outranks,
    remove_expired,
    resolve_pending,
    same_class,
)

from conftest import make_table

DAY = 86400


def rec(commander, user, priority, **kw):
    return UserRecord(commander=commander, user=user, priority=priority, **kw)


# -- bootstrap -----------------------------------------------------------------


def test_bootstrap_owner_at_class_zero():
    table = bootstrap("bob")
    assert table.cls_of("bob") == 0
    assert table.entry("bob").device_perm
    assert table.entry("bob").expiry is None


def test_bootstrap_twice_rejected():
    table = bootstrap("bob")
    with pytest.raises(AlreadyBootstrapped):
        bootstrap("alice", table)


def test_sole_owner_outranks_everyone_added_later():
    table = bootstrap("bob")
    table = add_user(rec("bob", "gary", 2), table, 0).table
    assert outranks("bob", "gary", table)
    assert not outranks("gary", "bob", table)


# -- add_user ------------------------------------------------------------------


def test_commander_may_assign_own_class():
    table = make_table(owner=0, ann=1)
    out = add_user(rec("ann", "newbie", 1), table, 0)
    assert out.accepted and out.table.cls_of("newbie") == 1


def test_commander_cannot_assign_above_own_class():
    table = make_table(owner=0, carl=2)
    with pytest.raises(AssignAboveOwnAuthority):
        add_user(rec("carl", "newbie", 1), table, 0)


def test_dual_add_higher_authority_commander_wins():
    # alice (class 0) says class 3, gary (class 2) says class 2:
    # alice's assignment stands regardless of arrival order.
    base = make_table(alice=0, gary=2)

    t1 = add_user(rec("gary", "kyle", 2), base, 0).table
    out = add_user(rec("alice", "kyle", 3), t1, 0)
    assert out.accepted and out.replaced
    assert out.table.cls_of("kyle") == 3

    t2 = add_user(rec("alice", "kyle", 3), base, 0).table
    out = add_user(rec("gary", "kyle", 2), t2, 0)
    assert not out.accepted and out.ignored_lower_authority
    assert out.table.cls_of("kyle") == 3


def test_equal_rank_disagreement_goes_pending():
    table = make_table(ann=1, ben=1)
    table = add_user(rec("ann", "kyle", 2), table, 0).table
    out = add_user(rec("ben", "kyle", 3), table, 0)
    assert not out.accepted
    assert out.pending is not None
    assert set(out.pending.notify) == {"ann", "ben"}
    assert not out.table.has("kyle")   # access blocked until resolved


def test_equal_rank_same_class_is_fine():
    table = make_table(ann=1, ben=1)
    table = add_user(rec("ann", "kyle", 2), table, 0).table
    out = add_user(rec("ben", "kyle", 2), table, 0)
    assert out.accepted and out.table.cls_of("kyle") == 2


def test_resolve_pending_installs_chosen_class():
    table = make_table(ann=1, ben=1)
    table = add_user(rec("ann", "kyle", 2), table, 0).table
    pending = add_user(rec("ben", "kyle", 3), table, 0).pending
    table = table.without("kyle")
    resolved = resolve_pending(pending, 3, "ann", table, 0)
    assert resolved.cls_of("kyle") == 3
    with pytest.raises(Exception):
        resolve_pending(pending, 1, "ann", table, 0)   # not among the proposals


def test_device_perm_propagation():
    table = make_table(owner=0)
    table = add_user(rec("owner", "ann", 1, device_perm=True), table, 0).table
    assert table.entry("ann").device_perm
    table = add_user(rec("ann", "ben", 1, device_perm=True), table, 0).table
    assert table.entry("ben").device_perm
    # ben hands off a perm he has; carl cannot get more than his commander.
    noperm = add_user(rec("owner", "carl", 1, device_perm=False), table, 0).table
    with pytest.raises(DevicePermEscalation):
        add_user(rec("carl", "dave", 2, device_perm=True), noperm, 0)


def test_unknown_and_expired_commander():
    table = make_table(owner=0)
    with pytest.raises(UnknownCommander):
        add_user(rec("ghost", "x", 2), table, 0)
    table = add_user(rec("owner", "temp", 2, validity=100), table, 0).table
    with pytest.raises(CommanderExpired):
        add_user(rec("temp", "x", 2), table, 200)


# -- remove_expired -------------------------------------------------------------


def test_temporary_user_removed_after_validity():
    table = bootstrap("alice")
    table = add_user(rec("alice", "gary", 4, validity=2 * DAY), table, 0).table
    updated, removed = remove_expired(table, 2 * DAY + 1)
    assert removed == ["gary"]
    assert not updated.has("gary")


def test_no_expiries_no_removals():
    table = make_table(owner=0, ann=1)
    updated, removed = remove_expired(table, 10**9)
    assert removed == [] and updated.users() == table.users()


def test_expiry_boundary_is_closed():
    # Frozen from a sweep oracle: expiry exactly equal to now is removed.
    table = bootstrap("alice")
    table = add_user(rec("alice", "gary", 4, expires_at=500), table, 0).table
    _, removed_at_499 = remove_expired(table, 499)
    _, removed_at_500 = remove_expired(table, 500)
    assert removed_at_499 == []
    assert removed_at_500 == ["gary"]


def test_remove_expired_idempotent():
    table = bootstrap("alice")
    table = add_user(rec("alice", "gary", 4, expires_at=500), table, 0).table
    once, _ = remove_expired(table, 600)
    twice, removed = remove_expired(once, 600)
    assert removed == []
    assert twice.to_doc() == once.to_doc()


# -- authority queries ------------------------------------------------------------


def test_outranks_examples():
    table = make_table(alice=1, bob=2)
    assert outranks("alice", "bob", table)
    assert not outranks("bob", "alice", table)


def test_outranks_irreflexive_and_same_class():
    table = make_table(alice=1)
    assert not outranks("alice", "alice", table)
    assert same_class("alice", "alice", table)


def test_class_zero_beats_class_three():
    table = make_table(owner=0, kid=3)
    assert outranks("owner", "kid", table)


def test_outranks_strict_partial_order():
    table = make_table(a=0, b=1, c=1, d=3)
    users = table.users()
    for x in users:
        assert not outranks(x, x, table)
        for y in users:
            for z in users:
                if outranks(x, y, table) and outranks(y, z, table):
                    assert outranks(x, z, table)
            if outranks(x, y, table):
                assert not outranks(y, x, table)


def test_added_entry_never_outranks_commander():
    table = make_table(owner=0, ann=1, carl=2)
    for commander in ("owner", "ann", "carl"):
        for cls in range(0, 5):
            try:
                out = add_user(rec(commander, f"u{commander}{cls}", cls), table, 0)
            except AssignAboveOwnAuthority:
                assert cls < table.cls_of(commander)
                continue
            assert out.table.cls_of(f"u{commander}{cls}") >= table.cls_of(commander)
