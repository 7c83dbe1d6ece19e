"""Shared builders for the test suite."""

from __future__ import annotations

import itertools

import pytest

from homegate.model import (
    Action,
    Condition,
    ConditionOp,
    PolicyClause,
    PriorityEntry,
    PriorityTable,
    SUBJECT_ALL,
)


def make_table(**classes: int) -> PriorityTable:
    """PriorityTable from user=class pairs; device_perm on class 0 only."""
    table = PriorityTable()
    for user, cls in classes.items():
        table = table.with_user(user, PriorityEntry(cls=cls, device_perm=(cls == 0)))
    return table


def cond_in(attr: str, lo: int, hi: int) -> Condition:
    return Condition(attr, ConditionOp.IN, low=lo, high=hi)


def cond_notin(attr: str, lo: int, hi: int) -> Condition:
    return Condition(attr, ConditionOp.NOT_IN, low=lo, high=hi)


def cond_window(start: int, end: int, positive: bool = True) -> Condition:
    op = ConditionOp.WINDOW if positive else ConditionOp.WINDOW_NOT
    return Condition("time", op, low=start, high=end)


def cond_member(attr: str, *tokens: str, user: str | None = None) -> Condition:
    return Condition(attr, ConditionOp.MEMBER, members=frozenset(tokens), user=user)


_ids = itertools.count(1000)


def clause(
    owner: str,
    action: Action | str = Action.DEMAND,
    subject: str = SUBJECT_ALL,
    device: str = "thermostat_1",
    conditions: tuple[Condition, ...] = (),
    clause_id: int | None = None,
) -> PolicyClause:
    return PolicyClause(
        id=next(_ids) if clause_id is None else clause_id,
        owners=(owner,),
        subject=subject,
        device=device,
        conditions=tuple(conditions),
        action=Action(action),
    )


@pytest.fixture
def alice_bob_12() -> PriorityTable:
    """Alice at class 1, Bob at class 2, plus a class-0 owner."""
    return make_table(owner=0, alice=1, bob=2)


@pytest.fixture
def alice_bob_22() -> PriorityTable:
    return make_table(owner=0, alice=2, bob=2)
