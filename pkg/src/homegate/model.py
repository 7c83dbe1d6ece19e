"""Core value types for the access-control engine.

Everything downstream (conflict classification, negotiation, rule
generation, enforcement) operates on the types defined here: policy
clauses, their conditions, attribute domains and regions, user priority
tables, and device descriptors. All types are immutable values; the
operations are pure functions.

Attribute domains are discretized at unit resolution (whole degrees,
single minutes) so that region arithmetic is exact and can be checked
against brute-force membership scans.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Union


class ModelError(ValueError):
    """Invalid value or operation on a model type."""


# ---------------------------------------------------------------------------
# Regions and domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntervalRegion:
    """Union of closed integer intervals in canonical form.

    Canonical means: spans sorted, pairwise disjoint, and non-adjacent
    (at integer resolution [50,59] and [60,70] merge into [50,70]).
    """

    spans: tuple[tuple[int, int], ...] = ()

    @staticmethod
    def canonical(spans: Iterable[tuple[int, int]]) -> "IntervalRegion":
        cleaned = sorted((lo, hi) for lo, hi in spans if lo <= hi)
        merged: list[tuple[int, int]] = []
        for lo, hi in cleaned:
            if merged and lo <= merged[-1][1] + 1:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        return IntervalRegion(tuple(merged))

    @staticmethod
    def span(lo: int, hi: int) -> "IntervalRegion":
        return IntervalRegion.canonical([(lo, hi)])

    @property
    def is_empty(self) -> bool:
        return not self.spans

    def contains(self, value: int) -> bool:
        return any(lo <= value <= hi for lo, hi in self.spans)

    def intersect(self, other: "IntervalRegion") -> "IntervalRegion":
        out = []
        for alo, ahi in self.spans:
            for blo, bhi in other.spans:
                lo, hi = max(alo, blo), min(ahi, bhi)
                if lo <= hi:
                    out.append((lo, hi))
        return IntervalRegion.canonical(out)

    def union(self, other: "IntervalRegion") -> "IntervalRegion":
        return IntervalRegion.canonical(self.spans + other.spans)

    def complement(self, domain: "IntervalDomain") -> "IntervalRegion":
        out = []
        cursor = domain.low
        for lo, hi in self.spans:
            if lo > cursor:
                out.append((cursor, min(lo - 1, domain.high)))
            cursor = max(cursor, hi + 1)
        if cursor <= domain.high:
            out.append((cursor, domain.high))
        return IntervalRegion.canonical(out)

    def overlaps(self, other: "IntervalRegion") -> bool:
        return not self.intersect(other).is_empty

    def values(self) -> Iterator[int]:
        for lo, hi in self.spans:
            yield from range(lo, hi + 1)


@dataclass(frozen=True)
class TokenRegion:
    """Subset of a finite token domain (presence states, on/off)."""

    members: frozenset[str] = frozenset()

    @property
    def is_empty(self) -> bool:
        return not self.members

    def contains(self, value: str) -> bool:
        return value in self.members

    def intersect(self, other: "TokenRegion") -> "TokenRegion":
        return TokenRegion(self.members & other.members)

    def union(self, other: "TokenRegion") -> "TokenRegion":
        return TokenRegion(self.members | other.members)

    def complement(self, domain: "TokenDomain") -> "TokenRegion":
        return TokenRegion(domain.tokens - self.members)

    def overlaps(self, other: "TokenRegion") -> bool:
        return bool(self.members & other.members)


Region = Union[IntervalRegion, TokenRegion]


@dataclass(frozen=True)
class IntervalDomain:
    low: int
    high: int

    def full_region(self) -> IntervalRegion:
        return IntervalRegion.span(self.low, self.high)

    def values(self) -> Iterator[int]:
        return iter(range(self.low, self.high + 1))


@dataclass(frozen=True)
class TokenDomain:
    tokens: frozenset[str]

    def full_region(self) -> TokenRegion:
        return TokenRegion(self.tokens)

    def values(self) -> Iterator[str]:
        return iter(sorted(self.tokens))


Domain = Union[IntervalDomain, TokenDomain]

MINUTES_PER_DAY = 1440

DEFAULT_DOMAINS: dict[str, Domain] = {
    "temperature": IntervalDomain(50, 90),
    "level": IntervalDomain(0, 100),
    "time": IntervalDomain(0, MINUTES_PER_DAY - 1),
    "location": TokenDomain(frozenset({"Home", "Away"})),
    "state": TokenDomain(frozenset({"on", "off"})),
}

# Attributes the language leaves open-world still need a domain for
# complement arithmetic; unit percentage is the least surprising default.
FALLBACK_DOMAIN = IntervalDomain(0, 100)


class DomainRegistry:
    """Maps attribute names to domains, including device-declared ones."""

    def __init__(self, extra: dict[str, Domain] | None = None):
        self._domains: dict[str, Domain] = dict(DEFAULT_DOMAINS)
        if extra:
            self._domains.update(extra)

    def register(self, attribute: str, domain: Domain) -> None:
        self._domains[attribute] = domain

    def register_device(self, device: "DeviceDescriptor") -> None:
        if device.value_attribute is not None:
            va = device.value_attribute
            self._domains.setdefault(va.name, IntervalDomain(va.low, va.high))

    def domain_for(self, attribute_key: str) -> Domain:
        name = attribute_key.split("@", 1)[0]
        return self._domains.get(name, FALLBACK_DOMAIN)


# ---------------------------------------------------------------------------
# Conditions
# ---------------------------------------------------------------------------


class ConditionOp(str, Enum):
    IN = "in"                # numeric interval inclusion
    NOT_IN = "notin"         # numeric interval exclusion
    WINDOW = "window"        # time-of-day window [start, end), may wrap midnight
    WINDOW_NOT = "window_not"
    MEMBER = "member"        # token membership (location, on/off state)
    REGION = "region"        # explicit region, produced by clause merging


@dataclass(frozen=True)
class Condition:
    """One predicate over a device or environment attribute.

    ``user`` binds presence conditions to a specific household member;
    ``location`` conditions are evaluated against that user's entry in
    the presence map.
    """

    attribute: str
    op: ConditionOp
    low: int | None = None
    high: int | None = None
    members: frozenset[str] | None = None
    region: Region | None = None
    user: str | None = None

    def __post_init__(self) -> None:
        if self.op in (ConditionOp.IN, ConditionOp.NOT_IN):
            if self.low is None or self.high is None:
                raise ModelError(f"{self.op.value} condition needs bounds")
            if self.low > self.high:
                raise ModelError(
                    f"inverted interval [{self.low}-{self.high}] on {self.attribute}"
                )
        elif self.op in (ConditionOp.WINDOW, ConditionOp.WINDOW_NOT):
            if self.low is None or self.high is None:
                raise ModelError("time window needs start and end")
            if not (0 <= self.low < MINUTES_PER_DAY and 0 <= self.high < MINUTES_PER_DAY):
                raise ModelError("time window bounds must fall within one day")
            if self.low == self.high:
                raise ModelError("zero-length time window")
        elif self.op is ConditionOp.MEMBER:
            if not self.members:
                raise ModelError("membership condition needs at least one token")
        elif self.op is ConditionOp.REGION:
            if self.region is None:
                raise ModelError("region condition needs a region")

    @property
    def key(self) -> str:
        """Identity used for condition-set uniqueness and commonality."""
        return self.attribute if self.user is None else f"{self.attribute}@{self.user}"

    def region_over(self, domain: Domain) -> Region:
        """The set of attribute values for which this condition holds."""
        if self.op is ConditionOp.IN:
            assert isinstance(domain, IntervalDomain)
            return IntervalRegion.span(
                max(self.low, domain.low), min(self.high, domain.high)
            )
        if self.op is ConditionOp.NOT_IN:
            assert isinstance(domain, IntervalDomain)
            return IntervalRegion.span(self.low, self.high).complement(domain)
        if self.op in (ConditionOp.WINDOW, ConditionOp.WINDOW_NOT):
            assert isinstance(domain, IntervalDomain)
            if self.low < self.high:
                window = IntervalRegion.span(self.low, self.high - 1)
            else:  # wraps midnight: [start, 24:00) plus [0:00, end)
                window = IntervalRegion.canonical(
                    [(self.low, domain.high), (domain.low, self.high - 1)]
                )
            if self.op is ConditionOp.WINDOW:
                return window
            return window.complement(domain)
        if self.op is ConditionOp.MEMBER:
            assert isinstance(domain, TokenDomain)
            return TokenRegion(self.members & domain.tokens)
        assert self.region is not None
        if isinstance(self.region, IntervalRegion):
            assert isinstance(domain, IntervalDomain)
            return self.region.intersect(domain.full_region())
        assert isinstance(domain, TokenDomain)
        return self.region.intersect(domain.full_region())

    def to_doc(self) -> dict:
        doc: dict = {"attribute": self.attribute, "op": self.op.value}
        if self.low is not None:
            doc["low"] = self.low
        if self.high is not None:
            doc["high"] = self.high
        if self.members is not None:
            doc["members"] = sorted(self.members)
        if self.region is not None:
            if isinstance(self.region, IntervalRegion):
                doc["region"] = {"spans": [list(s) for s in self.region.spans]}
            else:
                doc["region"] = {"members": sorted(self.region.members)}
        if self.user is not None:
            doc["user"] = self.user
        return doc

    @staticmethod
    def from_doc(doc: dict) -> "Condition":
        region: Region | None = None
        if "region" in doc:
            raw = doc["region"]
            if "spans" in raw:
                region = IntervalRegion(tuple((s[0], s[1]) for s in raw["spans"]))
            else:
                region = TokenRegion(frozenset(raw["members"]))
        return Condition(
            attribute=doc["attribute"],
            op=ConditionOp(doc["op"]),
            low=doc.get("low"),
            high=doc.get("high"),
            members=frozenset(doc["members"]) if "members" in doc else None,
            region=region,
            user=doc.get("user"),
        )


def condition_from_region(
    attribute: str, region: Region, domain: Domain, user: str | None = None
) -> Condition:
    """Canonical condition whose region equals ``region``.

    Single intervals simplify to ``in``, complements of single intervals
    to ``notin``; anything else keeps the explicit region form.
    """
    if isinstance(region, TokenRegion):
        return Condition(attribute, ConditionOp.MEMBER, members=region.members, user=user)
    assert isinstance(domain, IntervalDomain)
    if len(region.spans) == 1:
        lo, hi = region.spans[0]
        return Condition(attribute, ConditionOp.IN, low=lo, high=hi, user=user)
    hole = region.complement(domain)
    if len(hole.spans) == 1:
        lo, hi = hole.spans[0]
        return Condition(attribute, ConditionOp.NOT_IN, low=lo, high=hi, user=user)
    return Condition(attribute, ConditionOp.REGION, region=region, user=user)


@dataclass(frozen=True)
class AllowedRegion:
    """Region of permitted values for one attribute of one clause."""

    attribute: str
    region: Region


# ---------------------------------------------------------------------------
# Policy clauses
# ---------------------------------------------------------------------------


class Action(str, Enum):
    DEMAND = "demand"
    RESTRICT = "restrict"


#: Symbolic subject meaning "every user in the household".
SUBJECT_ALL = "*"

#: Restricted-user field value marking a general (all-users) device policy.
GENERAL = "0"


@dataclass(frozen=True)
class PolicyClause:
    """The negotiation unit: {owners, subject, device, conditions, action}.

    ``owners`` usually holds a single user; merged clauses carry both
    parents' owners. ``parents`` tracks the clause ids a merge consumed.
    """

    id: int
    owners: tuple[str, ...]
    subject: str
    device: str
    conditions: tuple[Condition, ...]
    action: Action
    expiry: int | None = None
    parents: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not self.device:
            raise ModelError("clause needs a device")
        if not self.owners:
            raise ModelError("clause needs at least one owner")
        keys = [c.key for c in self.conditions]
        if len(keys) != len(set(keys)):
            raise ModelError(f"duplicate condition attribute in clause {self.id}")

    def condition_for(self, key: str) -> Condition | None:
        for c in self.conditions:
            if c.key == key:
                return c
        return None

    def condition_keys(self) -> frozenset[str]:
        return frozenset(c.key for c in self.conditions)

    def to_doc(self) -> dict:
        doc: dict = {
            "id": self.id,
            "owners": list(self.owners),
            "subject": self.subject,
            "device": self.device,
            "conditions": [c.to_doc() for c in self.conditions],
            "action": self.action.value,
        }
        if self.expiry is not None:
            doc["expiry"] = self.expiry
        if self.parents:
            doc["parents"] = list(self.parents)
        return doc

    @staticmethod
    def from_doc(doc: dict) -> "PolicyClause":
        return PolicyClause(
            id=doc["id"],
            owners=tuple(doc["owners"]),
            subject=doc["subject"],
            device=doc["device"],
            conditions=tuple(Condition.from_doc(c) for c in doc["conditions"]),
            action=Action(doc["action"]),
            expiry=doc.get("expiry"),
            parents=tuple(doc.get("parents", ())),
        )


def allowed_region(clause: PolicyClause, attribute: str, domain: Domain) -> AllowedRegion:
    """Literal region of ``attribute`` values under the clause's conditions.

    An attribute the clause does not constrain yields the full domain.
    Restrict clauses return the region where the restriction fires;
    complement semantics are applied by callers.
    """
    cond = clause.condition_for(attribute)
    if cond is None:
        return AllowedRegion(attribute, domain_full(domain))
    return AllowedRegion(attribute, cond.region_over(domain))


def domain_full(domain: Domain) -> Region:
    return domain.full_region()


# ---------------------------------------------------------------------------
# Users and priorities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UserRecord:
    """Add-user request: commander, new user, class, device permission, validity."""

    commander: str
    user: str
    priority: int
    device_perm: bool = False
    validity: int | None = None      # seconds from acceptance
    expires_at: int | None = None    # absolute logical time; overrides validity
    role: str | None = None

    def __post_init__(self) -> None:
        if self.priority < 0:
            raise ModelError("priority class must be non-negative")

    def expiry_at(self, now: int) -> int | None:
        if self.expires_at is not None:
            return self.expires_at
        if self.validity is not None:
            return now + self.validity
        return None

    def to_doc(self) -> dict:
        doc: dict = {
            "commander": self.commander,
            "user": self.user,
            "priority": self.priority,
            "device_perm": self.device_perm,
        }
        if self.validity is not None:
            doc["validity"] = self.validity
        if self.expires_at is not None:
            doc["expires_at"] = self.expires_at
        if self.role is not None:
            doc["role"] = self.role
        return doc

    @staticmethod
    def from_doc(doc: dict) -> "UserRecord":
        return UserRecord(
            commander=doc["commander"],
            user=doc["user"],
            priority=int(doc["priority"]),
            device_perm=bool(doc.get("device_perm", False)),
            validity=doc.get("validity"),
            expires_at=doc.get("expires_at"),
            role=doc.get("role"),
        )


#: Conventional role labels for the standard priority classes.
ROLE_CLASSES = {"owner": 0, "adult": 1, "guest": 2, "child": 3}


@dataclass(frozen=True)
class PriorityEntry:
    cls: int
    device_perm: bool = False
    expiry: int | None = None
    added_by: str | None = None
    role: str | None = None

    def to_doc(self) -> dict:
        doc: dict = {"cls": self.cls, "device_perm": self.device_perm}
        if self.expiry is not None:
            doc["expiry"] = self.expiry
        if self.added_by is not None:
            doc["added_by"] = self.added_by
        if self.role is not None:
            doc["role"] = self.role
        return doc

    @staticmethod
    def from_doc(doc: dict) -> "PriorityEntry":
        return PriorityEntry(
            cls=int(doc["cls"]),
            device_perm=bool(doc.get("device_perm", False)),
            expiry=doc.get("expiry"),
            added_by=doc.get("added_by"),
            role=doc.get("role"),
        )


@dataclass(frozen=True)
class PriorityTable:
    """User id -> priority entry; class 0 holds the owners.

    Treated as an immutable snapshot: mutation helpers return new tables.
    """

    entries: tuple[tuple[str, PriorityEntry], ...] = ()

    def has(self, user: str) -> bool:
        return any(u == user for u, _ in self.entries)

    def entry(self, user: str) -> PriorityEntry:
        for u, e in self.entries:
            if u == user:
                return e
        raise ModelError(f"unknown user {user!r}")

    def cls_of(self, user: str) -> int:
        return self.entry(user).cls

    def users(self) -> tuple[str, ...]:
        return tuple(u for u, _ in self.entries)

    def with_user(self, user: str, entry: PriorityEntry) -> "PriorityTable":
        kept = tuple((u, e) for u, e in self.entries if u != user)
        return PriorityTable(kept + ((user, entry),))

    def without(self, user: str) -> "PriorityTable":
        return PriorityTable(tuple((u, e) for u, e in self.entries if u != user))

    def admins(self) -> tuple[str, ...]:
        """Users at the most authoritative class, in id order."""
        if not self.entries:
            return ()
        top = min(e.cls for _, e in self.entries)
        return tuple(sorted(u for u, e in self.entries if e.cls == top))

    def to_doc(self) -> dict:
        return {u: e.to_doc() for u, e in sorted(self.entries)}

    @staticmethod
    def from_doc(doc: dict) -> "PriorityTable":
        return PriorityTable(
            tuple((u, PriorityEntry.from_doc(e)) for u, e in sorted(doc.items()))
        )


def clause_class(clause: PolicyClause, table: PriorityTable) -> int:
    """Authority class of a clause: the most authoritative of its owners."""
    return min(table.cls_of(o) for o in clause.owners)


# ---------------------------------------------------------------------------
# Devices
# ---------------------------------------------------------------------------


class DeviceKind(str, Enum):
    THERMOSTAT = "thermostat"
    LOCK = "lock"
    LIGHT = "light"
    CAMERA = "camera"
    SENSOR = "sensor"


@dataclass(frozen=True)
class ValueAttribute:
    name: str
    low: int
    high: int
    unit: str = ""


@dataclass(frozen=True)
class DeviceDescriptor:
    id: str
    kind: DeviceKind
    is_binary: bool
    value_attribute: ValueAttribute | None = None

    def __post_init__(self) -> None:
        if self.is_binary == (self.value_attribute is not None):
            raise ModelError(
                f"device {self.id}: exactly one of is_binary / value_attribute"
            )

    def supports(self, attribute: str) -> bool:
        if attribute == "state":
            return self.kind is not DeviceKind.THERMOSTAT
        return self.value_attribute is not None and self.value_attribute.name == attribute

    def to_doc(self) -> dict:
        doc: dict = {"id": self.id, "kind": self.kind.value, "is_binary": self.is_binary}
        if self.value_attribute is not None:
            va = self.value_attribute
            doc["value_attribute"] = {
                "name": va.name, "low": va.low, "high": va.high, "unit": va.unit,
            }
        return doc

    @staticmethod
    def from_doc(doc: dict) -> "DeviceDescriptor":
        va = None
        if "value_attribute" in doc:
            raw = doc["value_attribute"]
            va = ValueAttribute(raw["name"], raw["low"], raw["high"], raw.get("unit", ""))
        return DeviceDescriptor(
            id=doc["id"],
            kind=DeviceKind(doc["kind"]),
            is_binary=bool(doc["is_binary"]),
            value_attribute=va,
        )


def standard_devices() -> tuple[DeviceDescriptor, ...]:
    """The evaluation roster: thermostat, lock, camera, four bulbs, sensors."""
    thermo = DeviceDescriptor(
        "thermostat_1", DeviceKind.THERMOSTAT, False,
        ValueAttribute("temperature", 50, 90, "F"),
    )
    lock = DeviceDescriptor("lock_1", DeviceKind.LOCK, True)
    camera = DeviceDescriptor("camera_1", DeviceKind.CAMERA, True)
    bulbs = tuple(
        DeviceDescriptor(f"bulb_{i}", DeviceKind.LIGHT, False, ValueAttribute("level", 0, 100, "%"))
        for i in range(1, 5)
    )
    sensors = tuple(
        DeviceDescriptor(f"motion_{i}", DeviceKind.SENSOR, True) for i in range(1, 7)
    ) + (
        DeviceDescriptor("temp_sensor_1", DeviceKind.SENSOR, True),
        DeviceDescriptor("door_1", DeviceKind.SENSOR, True),
        DeviceDescriptor("door_2", DeviceKind.SENSOR, True),
    )
    return (thermo, lock, camera) + bulbs + sensors


# ---------------------------------------------------------------------------
# Device policy arrays  {U, D, C1, C2, R}
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DevicePolicy:
    """UI-facing device policy: time window C1, value range C2, restricted user R.

    ``restricted`` names the user a restriction targets; the sentinel
    ``GENERAL`` ('0') marks a policy that applies to every user.
    """

    user: str
    device: str
    time_window: tuple[int, int] | None = None   # minutes of day, [start, end)
    value_range: tuple[int, int] | None = None
    restricted: str | None = None

    def to_doc(self) -> dict:
        doc: dict = {"user": self.user, "device": self.device}
        if self.time_window is not None:
            doc["time_window"] = list(self.time_window)
        if self.value_range is not None:
            doc["value_range"] = list(self.value_range)
        if self.restricted is not None:
            doc["restricted"] = self.restricted
        return doc

    @staticmethod
    def from_doc(doc: dict) -> "DevicePolicy":
        tw = doc.get("time_window")
        vr = doc.get("value_range")
        return DevicePolicy(
            user=doc["user"],
            device=doc["device"],
            time_window=(tw[0], tw[1]) if tw else None,
            value_range=(vr[0], vr[1]) if vr else None,
            restricted=doc.get("restricted"),
        )


def clause_from_device_policy(
    policy: DevicePolicy,
    ids: Iterator[int],
    value_attribute: str = "temperature",
) -> PolicyClause:
    """Compile a device policy array into a policy clause.

    A general policy (R = '0') becomes a demand on all users whose
    conditions grant the stated window/range. A policy naming a
    restricted user becomes a restrict clause whose conditions fire
    outside the granted window/range.
    """
    if policy.time_window is None and policy.value_range is None and policy.restricted is None:
        raise ModelError("device policy needs at least one of C1, C2, R")
    restricted = policy.restricted if policy.restricted is not None else GENERAL
    general = restricted == GENERAL
    conditions: list[Condition] = []
    if policy.time_window is not None:
        start, end = policy.time_window
        op = ConditionOp.WINDOW if general else ConditionOp.WINDOW_NOT
        conditions.append(Condition("time", op, low=start, high=end))
    if policy.value_range is not None:
        lo, hi = policy.value_range
        op = ConditionOp.IN if general else ConditionOp.NOT_IN
        conditions.append(Condition(value_attribute, op, low=lo, high=hi))
    return PolicyClause(
        id=next(ids),
        owners=(policy.user,),
        subject=SUBJECT_ALL if general else restricted,
        device=policy.device,
        conditions=tuple(conditions),
        action=Action.DEMAND if general else Action.RESTRICT,
    )


# ---------------------------------------------------------------------------
# Normalization of parsed clauses
# ---------------------------------------------------------------------------


def normalize(ast, clock: int, table: PriorityTable, ids: Iterator[int]) -> list[PolicyClause]:
    """Expand a parsed clause into one PolicyClause per (target, device).

    The ``location`` action becomes a demand carrying a presence
    condition; presence conditions bind to the clause subject when it is
    a concrete user, otherwise to the owner (whose being home scopes the
    rule, as for a general location-gated demand).
    """
    if not table.has(ast.owner):
        raise ModelError(f"clause owner {ast.owner!r} is not a known user")
    entry = table.entry(ast.owner)
    if entry.expiry is not None and entry.expiry <= clock:
        raise ModelError(f"clause owner {ast.owner!r} has expired")
    if not ast.devices:
        raise ModelError("clause needs at least one device")

    targets = list(ast.targets) if ast.targets else [SUBJECT_ALL]
    out: list[PolicyClause] = []
    for target, device in itertools.product(targets, ast.devices):
        bind = target if target != SUBJECT_ALL else ast.owner
        conditions = [
            _condition_from_ast(c, bind) for c in ast.conditions
        ]
        action = ast.action
        if action == "location":
            action = Action.DEMAND.value
            if not any(c.attribute == "location" for c in conditions):
                conditions.append(
                    Condition("location", ConditionOp.MEMBER,
                              members=frozenset({"Home"}), user=bind)
                )
        out.append(
            PolicyClause(
                id=next(ids),
                owners=(ast.owner,),
                subject=target,
                device=device,
                conditions=tuple(conditions),
                action=Action(action),
            )
        )
    return out


def _condition_from_ast(cond, bind_user: str) -> Condition:
    """Surface condition -> model condition, binding presence to a user."""
    from .policy_lang import ConditionForm

    if cond.form is ConditionForm.NUMERIC:
        op = ConditionOp.IN if cond.positive else ConditionOp.NOT_IN
        return Condition(cond.attribute, op, low=cond.low, high=cond.high)
    if cond.form is ConditionForm.TIME:
        op = ConditionOp.WINDOW if cond.positive else ConditionOp.WINDOW_NOT
        return Condition(cond.attribute, op, low=cond.low, high=cond.high)
    user = bind_user if cond.attribute == "location" else None
    return Condition(
        cond.attribute, ConditionOp.MEMBER, members=frozenset({cond.token}), user=user
    )
