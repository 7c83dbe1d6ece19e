"""Policy decision point: evaluate device commands against the rule table.

Evaluation order for a command:

1. unknown or expired actors are denied (unauthorized access);
2. structural permissions: adding/removing/reconfiguring devices needs
   the device permission, app installs need sufficient authority;
3. deny-shaped rules whose constraints hold fire first (a restricted
   actor commanding remotely counts as away for its own presence gates);
4. permit-shaped rules whose presence gates hold constrain value and
   time-of-day; violating any active one denies;
5. with no applicable rule the command is allowed (the platform's
   baseline is full access; policies only add restrictions).

Denials carry a threat tag where one of the five recognized patterns
matches, and every tagged denial notifies the policy assigner.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .abac import AbacRule, Effect, RuleTable
from .model import (
    Condition,
    DeviceDescriptor,
    DomainRegistry,
    IntervalRegion,
    MINUTES_PER_DAY,
    PolicyClause,
    PriorityTable,
    SUBJECT_ALL,
    TokenRegion,
)
from .priority import remove_expired


class Verb(str, Enum):
    SET_VALUE = "set_value"
    SWITCH = "switch"
    INSTALL_APP = "install_app"
    ADD_DEVICE = "add_device"
    REMOVE_DEVICE = "remove_device"
    SET_CODE = "set_code"


class Origin(str, Enum):
    HOME = "home_network"
    REMOTE = "remote"


class ThreatTag(str, Enum):
    T1 = "T1"   # over-privileged control: restricted user changes a device
    T2 = "T2"   # privilege abuse: unauthorized app installation
    T3 = "T3"   # privilege escalation: device removal/reconfiguration
    T4 = "T4"   # unauthorized access: expired or out-of-validity use
    T5 = "T5"   # transitive privilege: granting authority above one's own


class VerdictKind(str, Enum):
    ALLOW = "allow"
    DENY = "deny"


@dataclass(frozen=True)
class DeviceCommand:
    actor: str
    device: str
    verb: Verb
    attribute: str | None = None
    value: int | None = None
    state: str | None = None             # switch target: "on" / "off"
    app_id: str | None = None
    app_devices: tuple[str, ...] = ()    # devices an app install touches
    timestamp: int = 0
    origin: Origin = Origin.HOME

    def assignment(self) -> tuple[str, int | str] | None:
        """The attribute/value pair the command writes, if any."""
        if self.verb is Verb.SET_VALUE and self.attribute is not None:
            return self.attribute, self.value
        if self.verb is Verb.SWITCH and self.state is not None:
            return "state", self.state
        return None

    def to_doc(self) -> dict:
        doc: dict = {
            "actor": self.actor, "device": self.device, "verb": self.verb.value,
            "timestamp": self.timestamp, "origin": self.origin.value,
        }
        if self.attribute is not None:
            doc["attribute"] = self.attribute
        if self.value is not None:
            doc["value"] = self.value
        if self.state is not None:
            doc["state"] = self.state
        if self.app_id is not None:
            doc["app_id"] = self.app_id
        if self.app_devices:
            doc["app_devices"] = list(self.app_devices)
        return doc

    @staticmethod
    def from_doc(doc: dict) -> "DeviceCommand":
        return DeviceCommand(
            actor=doc["actor"],
            device=doc["device"],
            verb=Verb(doc["verb"]),
            attribute=doc.get("attribute"),
            value=doc.get("value"),
            state=doc.get("state"),
            app_id=doc.get("app_id"),
            app_devices=tuple(doc.get("app_devices", ())),
            timestamp=int(doc.get("timestamp", 0)),
            origin=Origin(doc.get("origin", Origin.HOME.value)),
        )


Notice = tuple[str, str]


@dataclass(frozen=True)
class Decision:
    verdict: VerdictKind
    matched_rule: str | None = None
    threat_tag: ThreatTag | None = None
    notifications: tuple[Notice, ...] = ()
    reason: str = ""

    @property
    def allowed(self) -> bool:
        return self.verdict is VerdictKind.ALLOW

    def to_doc(self) -> dict:
        doc: dict = {"verdict": self.verdict.value}
        if self.matched_rule is not None:
            doc["matched_rule"] = self.matched_rule
        if self.threat_tag is not None:
            doc["threat_tag"] = self.threat_tag.value
        if self.notifications:
            doc["notifications"] = [list(n) for n in self.notifications]
        if self.reason:
            doc["reason"] = self.reason
        return doc


#: user id -> "Home" / "Away"; unknown users default to Away.
PresenceMap = dict

AWAY = "Away"
HOME = "Home"


@dataclass(frozen=True)
class EnforcementConfig:
    #: most permissive class still allowed to install apps
    app_install_max_class: int = 1
    default_permit: bool = True


def _minute_of_day(clock: int) -> int:
    return (clock // 60) % MINUTES_PER_DAY


def _presence_of(user: str, presence: PresenceMap, cmd: DeviceCommand) -> str:
    """The actor's own presence counts as away when commanding remotely."""
    value = presence.get(user, AWAY)
    if user == cmd.actor and cmd.origin is Origin.REMOTE:
        return AWAY
    return value


def _condition_holds(
    cond: Condition,
    cmd: DeviceCommand,
    presence: PresenceMap,
    clock: int,
    domains: DomainRegistry,
) -> bool | None:
    """Whether the condition is satisfied now; None when undecidable.

    Value conditions on attributes the command does not write are
    undecidable and do not fire deny rules.
    """
    domain = domains.domain_for(cond.key)
    region = cond.region_over(domain)
    if cond.attribute == "location":
        user = cond.user or cmd.actor
        assert isinstance(region, TokenRegion)
        return region.contains(_presence_of(user, presence, cmd))
    if cond.attribute == "time":
        assert isinstance(region, IntervalRegion)
        return region.contains(_minute_of_day(clock))
    assignment = cmd.assignment()
    if assignment is None or assignment[0] != cond.attribute:
        return None
    attr, value = assignment
    if isinstance(region, TokenRegion):
        return isinstance(value, str) and region.contains(value)
    return isinstance(value, int) and region.contains(value)


def _subject_matches(rule: AbacRule, actor: str) -> bool:
    if rule.subject == SUBJECT_ALL:
        if rule.effect is Effect.DENY and actor in rule.owners:
            return False   # a general restriction never locks out its author
        return True
    return rule.subject == actor


def authorize(
    cmd: DeviceCommand,
    table: RuleTable,
    priorities: PriorityTable,
    presence: PresenceMap,
    clock: int,
    *,
    devices: dict[str, DeviceDescriptor] | None = None,
    domains: DomainRegistry | None = None,
    config: EnforcementConfig | None = None,
) -> Decision:
    """Binary allow/deny decision for one command against one snapshot."""
    domains = domains or DomainRegistry()
    config = config or EnforcementConfig()
    admins = priorities.admins()

    if not priorities.has(cmd.actor):
        return Decision(
            VerdictKind.DENY, threat_tag=ThreatTag.T4,
            notifications=_tagged_notices(admins, cmd, "unknown or removed user"),
            reason=f"actor {cmd.actor!r} is not an authorized user",
        )
    entry = priorities.entry(cmd.actor)
    if entry.expiry is not None and entry.expiry <= clock:
        return Decision(
            VerdictKind.DENY, threat_tag=ThreatTag.T4,
            notifications=_tagged_notices(admins, cmd, "expired validity"),
            reason=f"actor {cmd.actor!r} expired at {entry.expiry}",
        )

    if devices is not None and cmd.verb not in (Verb.ADD_DEVICE, Verb.INSTALL_APP) \
            and cmd.device not in devices:
        raise KeyError(f"unknown device {cmd.device!r}")

    if cmd.verb in (Verb.ADD_DEVICE, Verb.REMOVE_DEVICE, Verb.SET_CODE):
        if not entry.device_perm:
            return Decision(
                VerdictKind.DENY, threat_tag=ThreatTag.T3,
                notifications=_tagged_notices(admins, cmd, "device reconfiguration without permission"),
                reason=f"{cmd.actor!r} lacks the device permission for {cmd.verb.value}",
            )
        return Decision(VerdictKind.ALLOW)

    if cmd.verb is Verb.INSTALL_APP:
        if entry.cls > config.app_install_max_class:
            return Decision(
                VerdictKind.DENY, threat_tag=ThreatTag.T2,
                notifications=_tagged_notices(admins, cmd, "unauthorized app installation"),
                reason=f"class-{entry.cls} user may not install apps",
            )
        return Decision(VerdictKind.ALLOW)

    applicable = [r for r in table.for_resource(cmd.device) if _subject_matches(r, cmd.actor)]

    for rule in applicable:
        if rule.effect is not Effect.DENY:
            continue
        holds = [
            _condition_holds(c, cmd, presence, clock, domains) for c in rule.constraints
        ]
        if all(h is True for h in holds):
            recipients = tuple(dict.fromkeys(rule.owners + (cmd.actor,)))
            return Decision(
                VerdictKind.DENY, matched_rule=rule.id, threat_tag=ThreatTag.T1,
                notifications=tuple(
                    (r, f"restricted command by {cmd.actor} on {cmd.device} denied")
                    for r in recipients
                ),
                reason=f"restriction {rule.id} fired",
            )

    temporary = entry.expiry is not None
    for rule in applicable:
        if rule.effect is not Effect.PERMIT:
            continue
        gates = [c for c in rule.constraints if c.attribute == "location"]
        if any(not _condition_holds(c, cmd, presence, clock, domains) for c in gates):
            continue   # presence-scoped rule is inactive right now
        for cond in rule.constraints:
            if cond.attribute == "location":
                continue
            holds = _condition_holds(cond, cmd, presence, clock, domains)
            if holds is False:
                tag = ThreatTag.T4 if temporary else None
                recipients = tuple(dict.fromkeys(rule.owners + (cmd.actor,)))
                return Decision(
                    VerdictKind.DENY, matched_rule=rule.id, threat_tag=tag,
                    notifications=tuple(
                        (r, f"command by {cmd.actor} on {cmd.device} outside the "
                            f"permitted {cond.attribute} range")
                        for r in recipients
                    ),
                    reason=f"outside the region permitted by {rule.id}",
                )

    if applicable or config.default_permit:
        return Decision(VerdictKind.ALLOW)
    return Decision(VerdictKind.DENY, reason="no applicable rule and default deny")


def _tagged_notices(admins: tuple[str, ...], cmd: DeviceCommand, what: str) -> tuple[Notice, ...]:
    recipients = tuple(dict.fromkeys(admins + (cmd.actor,)))
    return tuple((r, f"{what}: {cmd.actor} -> {cmd.device} ({cmd.verb.value})")
                 for r in recipients)


def detect_threat_class(decision: Decision) -> ThreatTag | None:
    """The threat class of a denial, if one of the five patterns matched."""
    if decision.verdict is VerdictKind.ALLOW:
        return None
    return decision.threat_tag


def sweep(
    priorities: PriorityTable,
    clauses: list[PolicyClause],
    clock: int,
) -> tuple[PriorityTable, list[str], list[int], list[Notice]]:
    """Expire users and identify their clauses for purging.

    Returns the updated table, removed user ids, ids of clauses to
    retire, and the notifications to emit.
    """
    updated, removed = remove_expired(priorities, clock)
    gone = set(removed)
    retired = [c.id for c in clauses if set(c.owners) & gone]
    notices = [
        (admin, f"removed expired user {user}")
        for user in removed for admin in updated.admins() or priorities.admins()
    ]
    return updated, removed, retired, notices
