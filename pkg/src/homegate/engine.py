"""Single-writer engine: the live system behind the service and simulator.

Every mutation is computed against the current state, encoded as one or
more events, and applied through the same pure fold that replay uses, so
replaying a log rebuilds byte-identical state. The event payloads carry
full computed values (clauses, sessions, decisions); applying them never
re-runs negotiation logic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import policy_lang
from .abac import RuleTable, rebuild_table
from .conflict import ConflictReport, scan
from .enforcement import (
    Decision,
    DeviceCommand,
    EnforcementConfig,
    ThreatTag,
    Verb,
    VerdictKind,
    authorize,
)
from .model import (
    DeviceDescriptor,
    DevicePolicy,
    DomainRegistry,
    ModelError,
    PolicyClause,
    PriorityEntry,
    PriorityTable,
    UserRecord,
    clause_from_device_policy,
    normalize,
    standard_devices,
)
from .negotiation import (
    Escalated,
    NegotiationSession,
    Proposal,
    Resolved,
    SessionState,
    Verdict,
    expire_sessions,
    negotiate,
    respond as session_respond,
)
from .priority import (
    AssignAboveOwnAuthority,
    CommanderExpired,
    DevicePermEscalation,
    PendingResolution,
    UnknownCommander,
    add_user as priority_add_user,
    bootstrap as priority_bootstrap,
    resolve_pending as priority_resolve,
)
from .store import Store


class EngineError(Exception):
    pass


class UnknownEntity(EngineError):
    """Lookup of a user, device, or session that does not exist."""


class PermissionDenied(EngineError):
    """A request was refused; carries the decision for the caller."""

    def __init__(self, message: str, tag: ThreatTag | None = None):
        super().__init__(message)
        self.tag = tag


@dataclass(frozen=True)
class EngineConfig:
    app_install_max_class: int = 1
    session_ttl: int | None = None      # seconds an open offer survives
    default_permit: bool = True

    def enforcement(self) -> EnforcementConfig:
        return EnforcementConfig(
            app_install_max_class=self.app_install_max_class,
            default_permit=self.default_permit,
        )


# Clause lifecycle statuses.
SUBMITTED = "submitted"
ENFORCED = "enforced"
DEFEATED = "defeated"
SUPERSEDED = "superseded"
PENDING = "pending"
ESCALATED = "escalated"
EXPIRED = "expired"
REMOVED = "removed"

_RETIRE_STATUS = {
    "defeated": DEFEATED,
    "superseded": SUPERSEDED,
    "escalated": ESCALATED,
    "expired": EXPIRED,
    "owner_removed": REMOVED,
    "device_removed": REMOVED,
}


@dataclass
class EngineState:
    clock: int = 0
    users: PriorityTable = field(default_factory=PriorityTable)
    pending_users: dict[str, PendingResolution] = field(default_factory=dict)
    devices: dict[str, DeviceDescriptor] = field(default_factory=dict)
    presence: dict[str, str] = field(default_factory=dict)
    clauses: dict[int, PolicyClause] = field(default_factory=dict)
    clause_status: dict[int, str] = field(default_factory=dict)
    enforced: list[int] = field(default_factory=list)
    reports: list[dict] = field(default_factory=list)
    sessions: dict[int, NegotiationSession] = field(default_factory=dict)
    decisions: list[dict] = field(default_factory=list)
    notifications: list[dict] = field(default_factory=list)
    next_clause_id: int = 1
    next_session_id: int = 1

    def to_doc(self) -> dict:
        return {
            "clock": self.clock,
            "users": self.users.to_doc(),
            "pending_users": {u: p.to_doc() for u, p in sorted(self.pending_users.items())},
            "devices": {d: dd.to_doc() for d, dd in sorted(self.devices.items())},
            "presence": dict(sorted(self.presence.items())),
            "clauses": {str(i): c.to_doc() for i, c in sorted(self.clauses.items())},
            "clause_status": {str(i): s for i, s in sorted(self.clause_status.items())},
            "enforced": list(self.enforced),
            "reports": list(self.reports),
            "sessions": {str(i): s.to_doc() for i, s in sorted(self.sessions.items())},
            "decisions": list(self.decisions),
            "notifications": list(self.notifications),
            "next_clause_id": self.next_clause_id,
            "next_session_id": self.next_session_id,
        }


def apply_event(state: EngineState, kind: str, payload: dict) -> None:
    """Mechanical state transition for one event; no engine logic."""
    if kind == "device_added":
        device = DeviceDescriptor.from_doc(payload["device"])
        state.devices[device.id] = device
    elif kind == "device_removed":
        state.devices.pop(payload["device_id"], None)
    elif kind == "user_added" or kind == "user_resolved":
        entry = PriorityEntry.from_doc(payload["entry"])
        state.users = state.users.with_user(payload["user"], entry)
        state.pending_users.pop(payload["user"], None)
        state.presence.setdefault(payload["user"], "Away")
    elif kind == "user_pending":
        pending = PendingResolution.from_doc(payload["pending"])
        state.users = state.users.without(pending.user)
        state.pending_users[pending.user] = pending
    elif kind == "user_removed":
        state.users = state.users.without(payload["user"])
        state.pending_users.pop(payload["user"], None)
        state.presence.pop(payload["user"], None)
    elif kind == "policy_submitted":
        for doc in payload["clauses"]:
            clause = PolicyClause.from_doc(doc)
            state.clauses[clause.id] = clause
            state.clause_status[clause.id] = SUBMITTED
            state.next_clause_id = max(state.next_clause_id, clause.id + 1)
    elif kind == "conflict_detected":
        state.reports.append(payload["report"])
    elif kind == "session_opened":
        session = NegotiationSession.from_doc(payload["session"])
        state.sessions[session.id] = session
        state.next_session_id = max(state.next_session_id, session.id + 1)
        # the proposed clause holds an allocated id even before installation
        state.next_clause_id = max(state.next_clause_id,
                                   session.proposed_clause.id + 1)
    elif kind == "session_responded" or kind == "session_expired":
        session = NegotiationSession.from_doc(payload["session"])
        state.sessions[session.id] = session
    elif kind == "clause_status":
        cid = payload["clause_id"]
        state.clause_status[cid] = payload["status"]
        if payload["status"] != ENFORCED and cid in state.enforced:
            state.enforced.remove(cid)
    elif kind == "rule_installed":
        clause = PolicyClause.from_doc(payload["clause"])
        state.clauses[clause.id] = clause
        state.clause_status[clause.id] = ENFORCED
        if clause.id not in state.enforced:
            state.enforced.append(clause.id)
        state.next_clause_id = max(state.next_clause_id, clause.id + 1)
    elif kind == "rule_retired":
        cid = payload["clause_id"]
        if cid in state.enforced:
            state.enforced.remove(cid)
        state.clause_status[cid] = _RETIRE_STATUS.get(payload["reason"], REMOVED)
    elif kind == "command_decided":
        state.decisions.append(
            {"command": payload["command"], "decision": payload["decision"],
             "at": payload["at"]})
    elif kind == "notification_emitted":
        seq = len(state.notifications) + 1
        state.notifications.append({
            "seq": seq,
            "recipient": payload["recipient"],
            "message": payload["message"],
            "tag": payload.get("tag"),
            "at": payload["at"],
        })
    elif kind == "presence_changed":
        state.presence[payload["user"]] = payload["state"]
    elif kind == "clock_advanced":
        state.clock = payload["to"]
    else:
        raise EngineError(f"unknown event kind {kind!r}")


@dataclass(frozen=True)
class AddUserResult:
    accepted: bool
    pending: PendingResolution | None = None
    ignored: bool = False


@dataclass(frozen=True)
class SubmitResult:
    clauses: tuple[PolicyClause, ...]
    diagnostics: tuple[policy_lang.ParseDiagnostic, ...]
    reports: tuple[ConflictReport, ...]
    sessions: tuple[int, ...]          # session ids opened by this submission

    def to_doc(self) -> dict:
        return {
            "clauses": [c.to_doc() for c in self.clauses],
            "diagnostics": [
                {"line": d.line, "column": d.column, "message": d.message,
                 "severity": d.severity.value}
                for d in self.diagnostics
            ],
            "conflicts": [r.to_doc() for r in self.reports],
            "sessions": list(self.sessions),
        }


class Engine:
    """Owns the state; all mutation funnels through here, serialized."""

    def __init__(
        self,
        store: Store | None = None,
        devices: tuple[DeviceDescriptor, ...] | None = None,
        config: EngineConfig | None = None,
    ):
        self.store = store or Store()
        self.config = config or EngineConfig()
        self.state = EngineState()
        self.domains = DomainRegistry()
        self._rule_table = RuleTable()
        existing = self.store.events()
        if existing:
            for event in existing:
                apply_event(self.state, event.kind, event.payload)
            self._refresh_domains()
            self._rebuild_rules()
        else:
            roster = standard_devices() if devices is None else devices
            for device in roster:
                self._emit("device_added", {"device": device.to_doc()})
            self._refresh_domains()

    # -- plumbing ----------------------------------------------------------

    def _emit(self, kind: str, payload: dict) -> None:
        self.store.append_event(kind, payload, at=self.state.clock)
        apply_event(self.state, kind, payload)
        if kind in ("rule_installed", "rule_retired", "device_added", "device_removed"):
            self._refresh_domains()
            self._rebuild_rules()

    def _refresh_domains(self) -> None:
        self.domains = DomainRegistry()
        for device in self.state.devices.values():
            self.domains.register_device(device)

    def _rebuild_rules(self) -> None:
        clauses = [self.state.clauses[i] for i in sorted(self.state.enforced)]
        self._rule_table = rebuild_table(clauses)

    def _notify(self, recipient: str, message: str, tag: str | None = None) -> None:
        payload = {"recipient": recipient, "message": message, "at": self.state.clock}
        if tag:
            payload["tag"] = tag
        self._emit("notification_emitted", payload)

    def _record_decision(self, command_doc: dict, decision: Decision) -> None:
        self._emit("command_decided", {
            "command": command_doc,
            "decision": decision.to_doc(),
            "at": self.state.clock,
        })
        for recipient, message in decision.notifications:
            tag = decision.threat_tag.value if decision.threat_tag else None
            self._notify(recipient, message, tag)

    def _clause_ids(self):
        while True:
            cid = self.state.next_clause_id
            self.state.next_clause_id += 1
            yield cid

    def _session_ids(self):
        while True:
            sid = self.state.next_session_id
            self.state.next_session_id += 1
            yield sid

    @property
    def rule_table(self) -> RuleTable:
        return self._rule_table

    @property
    def clock(self) -> int:
        return self.state.clock

    # -- users ---------------------------------------------------------------

    def bootstrap(self, owner: str, role: str | None = None) -> None:
        table = priority_bootstrap(owner, self.state.users, role=role)
        entry = table.entry(owner)
        self._emit("user_added", {"user": owner, "entry": entry.to_doc()})

    def add_user(self, record: UserRecord) -> AddUserResult:
        try:
            outcome = priority_add_user(record, self.state.users, self.state.clock)
        except (AssignAboveOwnAuthority, DevicePermEscalation) as err:
            # the admins learn of the attempt; the initiator learns why it failed
            recipients = tuple(dict.fromkeys(
                self.state.users.admins() + (record.commander,)))
            decision = Decision(
                VerdictKind.DENY, threat_tag=ThreatTag.T5,
                notifications=tuple(
                    (who, f"blocked privilege grant by {record.commander}: {err}")
                    for who in recipients
                ),
                reason=str(err),
            )
            self._record_decision({"request": "add_user", **record.to_doc()}, decision)
            raise PermissionDenied(str(err), tag=ThreatTag.T5) from None
        except (UnknownCommander, CommanderExpired) as err:
            recipients = tuple(dict.fromkeys(
                self.state.users.admins() + (record.commander,)))
            decision = Decision(
                VerdictKind.DENY, threat_tag=ThreatTag.T4,
                notifications=tuple(
                    (who, f"blocked add_user by {record.commander}: {err}")
                    for who in recipients
                ),
                reason=str(err),
            )
            self._record_decision({"request": "add_user", **record.to_doc()}, decision)
            raise PermissionDenied(str(err), tag=ThreatTag.T4) from None

        if outcome.pending is not None:
            self._emit("user_pending", {"pending": outcome.pending.to_doc()})
            for party in outcome.pending.notify:
                self._notify(party, f"fix a priority level for {outcome.pending.user}")
            return AddUserResult(accepted=False, pending=outcome.pending)
        if outcome.ignored_lower_authority:
            self._notify(
                record.commander,
                f"{record.user} keeps the class set by a more authoritative user",
            )
            return AddUserResult(accepted=False, ignored=True)

        entry = outcome.table.entry(record.user)
        self._emit("user_added", {"user": record.user, "entry": entry.to_doc()})
        return AddUserResult(accepted=True)

    def resolve_pending_user(self, user: str, chosen_class: int, by: str) -> None:
        pending = self.state.pending_users.get(user)
        if pending is None:
            raise UnknownEntity(f"no pending resolution for {user!r}")
        table = priority_resolve(pending, chosen_class, by, self.state.users, self.state.clock)
        self._emit("user_resolved", {"user": user, "entry": table.entry(user).to_doc()})

    def remove_user(self, user: str, by: str) -> None:
        if not self.state.users.has(user):
            raise UnknownEntity(f"unknown user {user!r}")
        remover = self.state.users.entry(by) if self.state.users.has(by) else None
        if remover is None:
            raise PermissionDenied(f"unknown remover {by!r}", tag=ThreatTag.T4)
        target_cls = self.state.users.cls_of(user)
        if user != by and remover.cls > 0 and remover.cls >= target_cls:
            raise PermissionDenied(
                f"{by!r} lacks the authority to remove {user!r}", tag=ThreatTag.T3)
        self._drop_user(user, reason="removed_by_" + by)

    def _drop_user(self, user: str, reason: str) -> None:
        self._emit("user_removed", {"user": user, "reason": reason})
        for clause in list(self.state.clauses.values()):
            if user in clause.owners and self.state.clause_status[clause.id] in (
                    SUBMITTED, ENFORCED, PENDING):
                self._emit("rule_retired",
                           {"clause_id": clause.id, "reason": "owner_removed"})

    # -- policies ------------------------------------------------------------

    def submit_policy_text(self, text: str) -> SubmitResult:
        asts, diagnostics = policy_lang.parse_policy_set(text)
        ids = self._clause_ids()
        clauses: list[PolicyClause] = []
        for ast in asts:
            try:
                clauses.extend(normalize(ast, self.state.clock, self.state.users, ids))
            except ModelError as err:
                raise EngineError(str(err)) from None
        reports, sessions = self._integrate(clauses)
        return SubmitResult(tuple(clauses), tuple(diagnostics), tuple(reports), tuple(sessions))

    def submit_device_policy(self, policy: DevicePolicy) -> SubmitResult:
        if not self.state.users.has(policy.user):
            raise UnknownEntity(f"unknown user {policy.user!r}")
        if policy.device not in self.state.devices:
            raise UnknownEntity(f"unknown device {policy.device!r}")
        device = self.state.devices[policy.device]
        attr = device.value_attribute.name if device.value_attribute else "state"
        clause = clause_from_device_policy(policy, self._clause_ids(), value_attribute=attr)
        reports, sessions = self._integrate([clause])
        return SubmitResult((clause,), (), tuple(reports), tuple(sessions))

    def _active_clauses(self) -> list[PolicyClause]:
        return [
            c for i, c in sorted(self.state.clauses.items())
            if self.state.clause_status[i] in (SUBMITTED, ENFORCED)
        ]

    def _integrate(self, new_clauses: list[PolicyClause]) -> tuple[list[ConflictReport], list[int]]:
        """Register new clauses, then negotiate conflicts to a fixpoint."""
        if new_clauses:
            self._emit("policy_submitted",
                       {"clauses": [c.to_doc() for c in new_clauses]})
        return self._negotiate_fixpoint()

    def _negotiate_fixpoint(self) -> tuple[list[ConflictReport], list[int]]:
        all_reports: list[ConflictReport] = []
        opened: list[int] = []
        reported: set[tuple[int, int]] = set()
        for _ in range(10):   # merges shrink regions; a couple of rounds suffice
            candidates = self._active_clauses()
            reports = [
                r for r in scan(candidates, self.state.users, self.domains)
                if (r.clause_i, r.clause_j) not in reported
                and (r.clause_j, r.clause_i) not in reported
            ]
            if not reports:
                break
            # Record the whole batch first: a conflict settled as a side
            # effect of an earlier one in the batch is still a detection.
            for report in reports:
                reported.add((report.clause_i, report.clause_j))
                all_reports.append(report)
                self._emit("conflict_detected", {"report": report.to_doc()})
            for report in reports:
                ci = self.state.clauses[report.clause_i]
                cj = self.state.clauses[report.clause_j]
                if self.state.clause_status[ci.id] not in (SUBMITTED, ENFORCED):
                    continue
                if self.state.clause_status[cj.id] not in (SUBMITTED, ENFORCED):
                    continue
                outcome = negotiate(
                    report, ci, cj, self.state.users,
                    self.state.devices.get(ci.device),
                    domains=self.domains,
                    ids=self._clause_ids(),
                    session_ids=self._session_ids(),
                    clock=self.state.clock,
                    session_ttl=self.config.session_ttl,
                )
                opened.extend(self._apply_outcome(outcome))
        for clause in self._active_clauses():
            if self.state.clause_status[clause.id] == SUBMITTED:
                self._emit("rule_installed", {"clause": clause.to_doc()})
        return all_reports, opened

    def _apply_outcome(self, outcome) -> list[int]:
        opened: list[int] = []
        if isinstance(outcome, Resolved):
            for cid in outcome.retired:
                self._emit("rule_retired", {"clause_id": cid, "reason": "defeated"})
            self._emit("rule_installed", {"clause": outcome.clause.to_doc()})
        elif isinstance(outcome, Proposal):
            for cid in outcome.retired:
                self._emit("rule_retired", {"clause_id": cid, "reason": "defeated"})
            self._emit("session_opened", {"session": outcome.session.to_doc()})
            opened.append(outcome.session.id)
            if outcome.enforce_now is not None:
                self._emit("rule_installed", {"clause": outcome.enforce_now.to_doc()})
            else:
                # Both contested clauses sit out until the offer settles.
                for cid in (outcome.session.report.clause_i, outcome.session.report.clause_j):
                    if self.state.clause_status.get(cid) in (SUBMITTED, ENFORCED):
                        self._emit("clause_status", {"clause_id": cid, "status": PENDING})
        elif isinstance(outcome, Escalated):
            for cid in outcome.retired:
                if self.state.clause_status.get(cid) in (SUBMITTED, ENFORCED, PENDING):
                    self._emit("rule_retired", {"clause_id": cid, "reason": "escalated"})
        for recipient, message in outcome.notices:
            self._notify(recipient, message)
        return opened

    # -- negotiation responses ------------------------------------------------

    def respond(self, session_id: int, party: str, verdict: Verdict | str) -> NegotiationSession:
        session = self.state.sessions.get(session_id)
        if session is None:
            raise UnknownEntity(f"unknown session {session_id}")
        try:
            verdict = Verdict(verdict)
        except ValueError:
            raise EngineError(f"verdict must be accept or reject, got {verdict!r}") from None
        updated, outcome = session_respond(session, party, verdict, self.state.users)
        self._emit("session_responded", {
            "session": updated.to_doc(), "party": party, "verdict": verdict.value,
        })
        parents = updated.proposed_clause.parents
        if isinstance(outcome, Resolved):
            for cid in outcome.retired + parents:
                if self.state.clause_status.get(cid) in (SUBMITTED, ENFORCED, PENDING):
                    self._emit("rule_retired", {"clause_id": cid, "reason": "superseded"})
            self._emit("rule_installed", {"clause": outcome.clause.to_doc()})
            for recipient, message in outcome.notices:
                self._notify(recipient, message)
            self._negotiate_fixpoint()
        elif isinstance(outcome, Escalated):
            for cid in parents:
                if self.state.clause_status.get(cid) == PENDING:
                    self._emit("rule_retired", {"clause_id": cid, "reason": "escalated"})
            for recipient, message in outcome.notices:
                self._notify(recipient, message)
        elif outcome is None and updated.state is SessionState.REJECTED:
            for party_ in updated.parties:
                self._notify(party_, "offer rejected; the standing policy remains")
        return updated

    # -- commands --------------------------------------------------------------

    def command(self, cmd: DeviceCommand) -> Decision:
        self._sweep()
        try:
            decision = authorize(
                cmd, self._rule_table, self.state.users, self.state.presence,
                self.state.clock,
                devices=self.state.devices,
                domains=self.domains,
                config=self.config.enforcement(),
            )
        except KeyError as err:
            raise EngineError(str(err)) from None
        self._record_decision(cmd.to_doc(), decision)
        if decision.allowed and cmd.verb is Verb.ADD_DEVICE:
            raise EngineError("use add_device() for device creation")
        if decision.allowed and cmd.verb is Verb.REMOVE_DEVICE:
            self._remove_device_effects(cmd.device)
        return decision

    def add_device(self, descriptor: DeviceDescriptor, by: str) -> Decision:
        cmd = DeviceCommand(actor=by, device=descriptor.id, verb=Verb.ADD_DEVICE)
        decision = authorize(
            cmd, self._rule_table, self.state.users, self.state.presence,
            self.state.clock, devices=None, domains=self.domains,
            config=self.config.enforcement(),
        )
        self._record_decision(cmd.to_doc(), decision)
        if decision.allowed:
            if descriptor.id in self.state.devices:
                raise EngineError(f"device {descriptor.id!r} already exists")
            self._emit("device_added", {"device": descriptor.to_doc()})
        return decision

    def remove_device(self, device_id: str, by: str) -> Decision:
        if device_id not in self.state.devices:
            raise UnknownEntity(f"unknown device {device_id!r}")
        return self.command(DeviceCommand(actor=by, device=device_id, verb=Verb.REMOVE_DEVICE))

    def _remove_device_effects(self, device_id: str) -> None:
        self._emit("device_removed", {"device_id": device_id})
        for clause in list(self.state.clauses.values()):
            if clause.device == device_id and self.state.clause_status[clause.id] in (
                    SUBMITTED, ENFORCED, PENDING):
                self._emit("rule_retired",
                           {"clause_id": clause.id, "reason": "device_removed"})

    # -- presence and time -------------------------------------------------------

    def set_presence(self, user: str, state: str) -> None:
        if state not in ("Home", "Away"):
            raise EngineError(f"presence must be Home or Away, got {state!r}")
        if not self.state.users.has(user):
            raise UnknownEntity(f"unknown user {user!r}")
        self._emit("presence_changed", {"user": user, "state": state})

    def advance_clock(self, *, to: int | None = None, by: int | None = None) -> None:
        if to is None:
            if by is None:
                raise EngineError("advance_clock needs 'to' or 'by'")
            to = self.state.clock + by
        if to < self.state.clock:
            raise EngineError("the logical clock never goes backwards")
        self._emit("clock_advanced", {"to": to})
        self._sweep()

    def _sweep(self) -> None:
        expired = [
            u for u, e in self.state.users.entries
            if e.expiry is not None and e.expiry <= self.state.clock
        ]
        for user in expired:
            self._drop_user(user, reason="expired")
            for admin in self.state.users.admins():
                self._notify(admin, f"removed expired user {user}", tag=ThreatTag.T4.value)
        for session, escalated in expire_sessions(
                list(self.state.sessions.values()), self.state.clock, self.state.users):
            self._emit("session_expired", {"session": session.to_doc()})
            for recipient, message in escalated.notices:
                self._notify(recipient, message)

    # -- queries -------------------------------------------------------------

    def notifications(self, since: int = 0) -> list[dict]:
        return [n for n in self.state.notifications if n["seq"] > since]

    def open_sessions(self) -> list[NegotiationSession]:
        return [s for s in self.state.sessions.values() if s.state is SessionState.OPEN]

    def snapshot_doc(self) -> dict:
        return self.state.to_doc()

    def write_snapshot(self) -> str:
        return self.store.write_snapshot(self.snapshot_doc())

    @classmethod
    def replay(cls, events, config: EngineConfig | None = None) -> "Engine":
        """Rebuild an engine purely from an event log."""
        engine = cls.__new__(cls)
        engine.store = Store()
        engine.config = config or EngineConfig()
        engine.state = EngineState()
        for event in events:
            apply_event(engine.state, event.kind, event.payload)
        engine.domains = DomainRegistry()
        engine._refresh_domains()
        engine._rebuild_rules()
        return engine
