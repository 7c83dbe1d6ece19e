"""Priority table maintenance and authority queries.

Priority classes are non-negative integers; class 0 is the owners' class
and a *lower* number means *more* authority. The assignment rules:

* the system bootstraps with its owner at class 0;
* a commander may assign only their own class or a numerically higher one;
* device add/remove permission propagates only from commanders who hold it;
* when two commanders add the same user at different classes, the more
  authoritative commander's assignment wins;
* equal-rank commanders disagreeing leaves the new user pending until an
  authorized party fixes the class;
* expired users are swept from the table.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import PriorityEntry, PriorityTable, UserRecord


class PriorityError(Exception):
    """Base for priority-rule violations."""


class AlreadyBootstrapped(PriorityError):
    pass


class UnknownCommander(PriorityError):
    pass


class CommanderExpired(PriorityError):
    pass


class AssignAboveOwnAuthority(PriorityError):
    """Commander tried to hand out more authority than they hold (threat-5 shape)."""


class DevicePermEscalation(PriorityError):
    """Commander granted a device permission they do not have."""


@dataclass(frozen=True)
class PendingResolution:
    """Equal-rank commanders disagree on the new user's class.

    The user is not inserted; both commanders are notified and an
    explicit resolution fixes the class.
    """

    user: str
    proposals: tuple[tuple[str, int], ...]   # (commander, proposed class)
    notify: tuple[str, ...]

    def to_doc(self) -> dict:
        return {
            "user": self.user,
            "proposals": [list(p) for p in self.proposals],
            "notify": list(self.notify),
        }

    @staticmethod
    def from_doc(doc: dict) -> "PendingResolution":
        return PendingResolution(
            user=doc["user"],
            proposals=tuple((p[0], int(p[1])) for p in doc["proposals"]),
            notify=tuple(doc["notify"]),
        )


@dataclass(frozen=True)
class AddOutcome:
    """Result of an add_user call: a new table, and what happened."""

    table: PriorityTable
    accepted: bool
    replaced: bool = False
    ignored_lower_authority: bool = False
    pending: PendingResolution | None = None


def bootstrap(owner: str, table: PriorityTable | None = None, role: str | None = None) -> PriorityTable:
    """Create the table with the hub owner at class 0."""
    if table is not None and table.entries:
        raise AlreadyBootstrapped("table already has users")
    entry = PriorityEntry(cls=0, device_perm=True, role=role or "owner")
    return PriorityTable(((owner, entry),))


def add_user(rec: UserRecord, table: PriorityTable, clock: int) -> AddOutcome:
    """Insert (or re-adjudicate) a user per the assignment rules."""
    if not table.has(rec.commander):
        raise UnknownCommander(f"commander {rec.commander!r} is not in the system")
    commander = table.entry(rec.commander)
    if commander.expiry is not None and commander.expiry <= clock:
        raise CommanderExpired(f"commander {rec.commander!r} has expired")
    if rec.priority < commander.cls:
        raise AssignAboveOwnAuthority(
            f"class-{commander.cls} commander {rec.commander!r} cannot assign "
            f"class {rec.priority}"
        )
    if rec.device_perm and not commander.device_perm:
        raise DevicePermEscalation(
            f"commander {rec.commander!r} lacks the device permission being granted"
        )

    entry = PriorityEntry(
        cls=rec.priority,
        device_perm=rec.device_perm,
        expiry=rec.expiry_at(clock),
        added_by=rec.commander,
        role=rec.role,
    )

    if not table.has(rec.user):
        return AddOutcome(table.with_user(rec.user, entry), accepted=True)

    existing = table.entry(rec.user)
    if existing.cls == rec.priority:
        # Same class from a second commander: nothing to dispute.
        return AddOutcome(table, accepted=True)
    prev_by = existing.added_by
    prev_cls = table.entry(prev_by).cls if prev_by and table.has(prev_by) else 0
    if commander.cls < prev_cls:
        return AddOutcome(table.with_user(rec.user, entry), accepted=True, replaced=True)
    if commander.cls > prev_cls:
        return AddOutcome(table, accepted=False, ignored_lower_authority=True)
    pending = PendingResolution(
        user=rec.user,
        proposals=((prev_by or "", existing.cls), (rec.commander, rec.priority)),
        notify=tuple(sorted({p for p in (prev_by, rec.commander) if p})),
    )
    # Disputed: the user keeps no access until an explicit resolution.
    return AddOutcome(table.without(rec.user), accepted=False, pending=pending)


def resolve_pending(
    pending: PendingResolution, chosen_class: int, by: str, table: PriorityTable, clock: int
) -> PriorityTable:
    """Fix a disputed class; the resolver must be party to the dispute or outrank both."""
    parties = {p for p, _ in pending.proposals}
    if by not in parties:
        by_cls = table.cls_of(by)
        if any(table.has(p) and table.cls_of(p) <= by_cls for p in parties):
            raise PriorityError(f"{by!r} may not resolve this dispute")
    if chosen_class not in {c for _, c in pending.proposals}:
        raise PriorityError(f"class {chosen_class} was not one of the proposals")
    entry = PriorityEntry(cls=chosen_class, device_perm=False, added_by=by)
    return table.with_user(pending.user, entry)


def remove_expired(table: PriorityTable, clock: int) -> tuple[PriorityTable, list[str]]:
    """Drop every user whose expiry has passed (closed bound: expiry == now goes)."""
    removed = [u for u, e in table.entries if e.expiry is not None and e.expiry <= clock]
    out = table
    for user in removed:
        out = out.without(user)
    return out, removed


def outranks(a: str, b: str, table: PriorityTable) -> bool:
    """True iff ``a`` holds strictly more authority (lower class number)."""
    return table.cls_of(a) < table.cls_of(b)


def same_class(a: str, b: str, table: PriorityTable) -> bool:
    return table.cls_of(a) == table.cls_of(b)


def authority(user: str, table: PriorityTable) -> int:
    """Authority value: negated class, so greater means more authority."""
    return -table.cls_of(user)
