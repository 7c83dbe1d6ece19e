"""Conflict resolution: turn a classified conflict into an outcome.

Per conflict class:

* HPC : the strictly more authoritative owner's clause stands; both
  owners are notified.
* SPC : the outranking owner's clause takes effect immediately and that
  owner is offered the merged (common-range) clause; accepting swaps the
  merged clause in, rejecting keeps the standing one.
* HCC : binary devices go to a majority vote; ranged devices open a
  proposal at the floor-midpoint average of both condition sets. All
  parties accepting installs the averaged clause; any rejection
  escalates to the most authoritative user.
* SCC : both clauses merge immediately: same actions intersect their
  regions, opposite actions intersect with the complement.
* RC  : the restriction stands; the restricted user is notified.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterator

from .conflict import ConflictClass, ConflictReport
from .model import (
    Action,
    Condition,
    ConditionOp,
    DeviceDescriptor,
    DomainRegistry,
    ModelError,
    PolicyClause,
    PriorityTable,
    TokenRegion,
    clause_class,
    condition_from_region,
)


class NegotiationError(Exception):
    pass


class MergeEmptyRegion(NegotiationError):
    """Merged conditions left no permitted value on some attribute."""


Notice = tuple[str, str]


@dataclass(frozen=True)
class Resolved:
    clause: PolicyClause
    retired: tuple[int, ...] = ()
    notices: tuple[Notice, ...] = ()


@dataclass(frozen=True)
class Proposal:
    session: "NegotiationSession"
    enforce_now: PolicyClause | None = None   # SPC: effective while the offer is open
    retired: tuple[int, ...] = ()
    notices: tuple[Notice, ...] = ()


@dataclass(frozen=True)
class Escalated:
    to: str
    reason: str
    retired: tuple[int, ...] = ()
    notices: tuple[Notice, ...] = ()


NegotiationOutcome = Resolved | Proposal | Escalated


class SessionState(str, Enum):
    OPEN = "open"
    AGREED = "agreed"
    REJECTED = "rejected"
    ESCALATED = "escalated"


class Verdict(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    PENDING = "pending"


@dataclass(frozen=True)
class NegotiationSession:
    """An open offer awaiting human agreement."""

    id: int
    kind: ConflictClass                     # SPC or HCC
    report: ConflictReport
    proposal: tuple[Condition, ...]
    proposed_clause: PolicyClause           # installed when every party accepts
    parties: tuple[str, ...]
    responses: tuple[tuple[str, Verdict], ...]
    state: SessionState
    created_at: int
    expires_at: int | None = None
    standing_clause: int | None = None      # SPC: clause that holds meanwhile

    def response_of(self, party: str) -> Verdict:
        for p, v in self.responses:
            if p == party:
                return v
        raise NegotiationError(f"{party!r} is not a party to session {self.id}")

    def to_doc(self) -> dict:
        doc: dict = {
            "id": self.id,
            "kind": self.kind.value,
            "report": self.report.to_doc(),
            "proposal": [c.to_doc() for c in self.proposal],
            "proposed_clause": self.proposed_clause.to_doc(),
            "parties": list(self.parties),
            "responses": {p: v.value for p, v in self.responses},
            "state": self.state.value,
            "created_at": self.created_at,
        }
        if self.expires_at is not None:
            doc["expires_at"] = self.expires_at
        if self.standing_clause is not None:
            doc["standing_clause"] = self.standing_clause
        return doc

    @staticmethod
    def from_doc(doc: dict) -> "NegotiationSession":
        return NegotiationSession(
            id=int(doc["id"]),
            kind=ConflictClass(doc["kind"]),
            report=ConflictReport.from_doc(doc["report"]),
            proposal=tuple(Condition.from_doc(c) for c in doc["proposal"]),
            proposed_clause=PolicyClause.from_doc(doc["proposed_clause"]),
            parties=tuple(doc["parties"]),
            responses=tuple((p, Verdict(v)) for p, v in sorted(doc["responses"].items())),
            state=SessionState(doc["state"]),
            created_at=int(doc["created_at"]),
            expires_at=doc.get("expires_at"),
            standing_clause=doc.get("standing_clause"),
        )


# ---------------------------------------------------------------------------
# Condition-set arithmetic
# ---------------------------------------------------------------------------


def average_conditions(
    ci: tuple[Condition, ...],
    cj: tuple[Condition, ...],
    domains: DomainRegistry | None = None,
) -> tuple[Condition, ...]:
    """Floor-midpoint average of the common numeric attributes.

    [60,70] with [75,80] averages to [67,75]; time windows average
    endpoint-wise in minutes. Attributes present on one side only are
    carried through unchanged.
    """
    domains = domains or DomainRegistry()
    by_i = {c.key: c for c in ci}
    by_j = {c.key: c for c in cj}
    common = set(by_i) & set(by_j)
    averaged_numeric = False
    out: list[Condition] = []
    for key in sorted(set(by_i) | set(by_j)):
        if key not in common:
            out.append(by_i.get(key) or by_j[key])
            continue
        a, b = by_i[key], by_j[key]
        if a.op in (ConditionOp.WINDOW, ConditionOp.WINDOW_NOT) and a.op is b.op:
            out.append(replace(a, low=(a.low + b.low) // 2, high=(a.high + b.high) // 2))
            averaged_numeric = True
            continue
        lo_a, hi_a = _numeric_bounds(a, domains)
        lo_b, hi_b = _numeric_bounds(b, domains)
        if lo_a is None or lo_b is None:
            merged = a.region_over(domains.domain_for(key)).intersect(
                b.region_over(domains.domain_for(key)))
            if merged.is_empty:
                raise NegotiationError(f"no agreeable values for {key}")
            out.append(condition_from_region(a.attribute, merged,
                                             domains.domain_for(key), user=a.user))
            continue
        out.append(Condition(a.attribute, ConditionOp.IN,
                             low=(lo_a + lo_b) // 2, high=(hi_a + hi_b) // 2,
                             user=a.user))
        averaged_numeric = True
    if not averaged_numeric:
        raise NegotiationError("no common numeric attribute to average")
    return tuple(out)


def _numeric_bounds(cond: Condition, domains: DomainRegistry) -> tuple[int | None, int | None]:
    if cond.op is ConditionOp.IN:
        return cond.low, cond.high
    if cond.op in (ConditionOp.NOT_IN, ConditionOp.REGION):
        region = cond.region_over(domains.domain_for(cond.key))
        if isinstance(region, TokenRegion) or region.is_empty:
            return None, None
        return region.spans[0][0], region.spans[-1][1]
    return None, None


def merge_soft(
    ci: PolicyClause,
    cj: PolicyClause,
    ids: Iterator[int],
    domains: DomainRegistry | None = None,
) -> PolicyClause:
    """Merged clause for a soft conflict, owned by both owners.

    Same actions take the region intersection per attribute; opposite
    actions intersect the first clause's regions with the complement of
    the second's. An empty region on any attribute aborts the merge.
    """
    domains = domains or DomainRegistry()
    by_i = {c.key: c for c in ci.conditions}
    by_j = {c.key: c for c in cj.conditions}
    same_action = ci.action is cj.action
    out: list[Condition] = []
    for key in sorted(set(by_i) | set(by_j)):
        domain = domains.domain_for(key)
        a, b = by_i.get(key), by_j.get(key)
        if a is not None and b is None:
            out.append(a)
            continue
        if b is not None and a is None:
            region = b.region_over(domain)
            if not same_action:
                region = region.complement(domain)
            if region.is_empty:
                raise MergeEmptyRegion(f"{key}: no permitted values after merge")
            if region == domain.full_region():
                continue
            out.append(condition_from_region(b.attribute, region, domain, user=b.user))
            continue
        region_b = b.region_over(domain)
        if not same_action:
            region_b = region_b.complement(domain)
        region = a.region_over(domain).intersect(region_b)
        if region.is_empty:
            raise MergeEmptyRegion(f"{key}: no permitted values after merge")
        out.append(condition_from_region(a.attribute, region, domain, user=a.user))
    return PolicyClause(
        id=next(ids),
        owners=tuple(dict.fromkeys(ci.owners + cj.owners)),
        subject=ci.subject,
        device=ci.device,
        conditions=tuple(out),
        action=ci.action,
        parents=(ci.id, cj.id),
    )


# ---------------------------------------------------------------------------
# Outcome computation
# ---------------------------------------------------------------------------


def _escalation_target(table: PriorityTable) -> str:
    admins = table.admins()
    return admins[0] if admins else "admin"


def desired_state(clause: PolicyClause, domains: DomainRegistry) -> str | None:
    """The single on/off state a clause asks for, if it does."""
    cond = clause.condition_for("state")
    if cond is None:
        return None
    region = cond.region_over(domains.domain_for("state"))
    if isinstance(region, TokenRegion) and len(region.members) == 1:
        return next(iter(region.members))
    return None


def majority_vote(
    clauses: list[PolicyClause],
    device: DeviceDescriptor,
    table: PriorityTable,
    domains: DomainRegistry | None = None,
) -> NegotiationOutcome:
    """Strict majority over the desired binary state; ties escalate."""
    domains = domains or DomainRegistry()
    if not device.is_binary:
        raise NegotiationError(f"{device.id} is not a binary device")
    if not clauses:
        raise NegotiationError("nothing to vote on")
    votes: dict[str, list[PolicyClause]] = {}
    for clause in clauses:
        state = desired_state(clause, domains)
        votes.setdefault(state or "either", []).append(clause)
    ranked = sorted(votes.items(), key=lambda kv: (-len(kv[1]), kv[0]))
    if len(ranked) == 1 or len(ranked[0][1]) > len(ranked[1][1]):
        winner = min(ranked[0][1], key=lambda c: c.id)
        losers = tuple(c.id for c in clauses if c.id != winner.id)
        notices = tuple(
            (owner, f"majority vote on {device.id}: state {ranked[0][0]} wins")
            for clause in clauses for owner in clause.owners
        )
        return Resolved(winner, retired=losers, notices=notices)
    target = _escalation_target(table)
    return Escalated(
        to=target,
        reason=f"majority vote tied on {device.id}",
        retired=tuple(c.id for c in clauses),
        notices=((target, f"tie on {device.id}: decide the policy"),),
    )


def negotiate(
    report: ConflictReport,
    ci: PolicyClause,
    cj: PolicyClause,
    table: PriorityTable,
    device: DeviceDescriptor | None,
    *,
    domains: DomainRegistry | None = None,
    ids: Iterator[int],
    session_ids: Iterator[int],
    clock: int = 0,
    session_ttl: int | None = None,
) -> NegotiationOutcome:
    """Resolve one classified conflict into an outcome.

    ``ci``/``cj`` must be the clauses the report names, in order.
    """
    domains = domains or DomainRegistry()
    if report.conflict_class is ConflictClass.NONE:
        raise NegotiationError("nothing to negotiate")
    if (ci.id, cj.id) != (report.clause_i, report.clause_j):
        raise NegotiationError("clauses do not match the report")

    cls_i, cls_j = clause_class(ci, table), clause_class(cj, table)
    hi, lo = (ci, cj) if cls_i <= cls_j else (cj, ci)   # hi = more authoritative
    expires = clock + session_ttl if session_ttl else None

    if report.conflict_class is ConflictClass.HPC:
        notices = tuple(
            (owner, f"policy conflict on {ci.device}: {_owner_label(hi)}'s clause stands")
            for owner in ci.owners + cj.owners
        )
        return Resolved(hi, retired=(lo.id,), notices=notices)

    if report.conflict_class is ConflictClass.RC:
        restrict, demand = (ci, cj) if ci.action is Action.RESTRICT else (cj, ci)
        notices = tuple(
            (user, f"your policy on {restrict.device} is restricted by {_owner_label(restrict)}")
            for user in demand.owners
        )
        return Resolved(restrict, retired=(demand.id,), notices=notices)

    if report.conflict_class is ConflictClass.SPC:
        try:
            merged = merge_soft(hi, lo, ids, domains)
        except MergeEmptyRegion as err:
            target = _escalation_target(table)
            return Escalated(to=target, reason=str(err), retired=(lo.id,),
                             notices=((target, f"unmergeable conflict on {ci.device}: {err}"),))
        parties = tuple(sorted(set(hi.owners)))
        session = NegotiationSession(
            id=next(session_ids),
            kind=ConflictClass.SPC,
            report=report,
            proposal=merged.conditions,
            proposed_clause=merged,
            parties=parties,
            responses=tuple((p, Verdict.PENDING) for p in parties),
            state=SessionState.OPEN,
            created_at=clock,
            expires_at=expires,
            standing_clause=hi.id,
        )
        notices = tuple(
            (p, f"common range offered on {ci.device}; your clause stands meanwhile")
            for p in parties
        )
        return Proposal(session, enforce_now=hi, retired=(lo.id,), notices=notices)

    if report.conflict_class is ConflictClass.HCC:
        if device is not None and device.is_binary:
            return majority_vote([ci, cj], device, table, domains)
        try:
            proposal = average_conditions(ci.conditions, cj.conditions, domains)
        except (NegotiationError, ModelError) as err:
            target = _escalation_target(table)
            return Escalated(to=target, reason=str(err),
                             retired=(ci.id, cj.id),
                             notices=((target, f"undecidable conflict on {ci.device}: {err}"),))
        proposed = PolicyClause(
            id=next(ids),
            owners=tuple(dict.fromkeys(ci.owners + cj.owners)),
            subject=ci.subject,
            device=ci.device,
            conditions=proposal,
            action=ci.action,
            parents=(ci.id, cj.id),
        )
        parties = tuple(sorted(set(ci.owners) | set(cj.owners)))
        session = NegotiationSession(
            id=next(session_ids),
            kind=ConflictClass.HCC,
            report=report,
            proposal=proposal,
            proposed_clause=proposed,
            parties=parties,
            responses=tuple((p, Verdict.PENDING) for p in parties),
            state=SessionState.OPEN,
            created_at=clock,
            expires_at=expires,
        )
        notices = tuple((p, f"average condition proposed on {ci.device}") for p in parties)
        return Proposal(session, notices=notices)

    # SCC: merge immediately.
    primary, secondary = (ci, cj) if ci.id <= cj.id else (cj, ci)
    try:
        merged = merge_soft(primary, secondary, ids, domains)
    except MergeEmptyRegion as err:
        target = _escalation_target(table)
        return Escalated(to=target, reason=str(err), retired=(ci.id, cj.id),
                         notices=((target, f"unmergeable conflict on {ci.device}: {err}"),))
    notices = tuple(
        (owner, f"policies on {ci.device} merged to a common range")
        for owner in merged.owners
    )
    return Resolved(merged, retired=(ci.id, cj.id), notices=notices)


def _owner_label(clause: PolicyClause) -> str:
    return "/".join(clause.owners)


# ---------------------------------------------------------------------------
# Session state machine
# ---------------------------------------------------------------------------


class SessionClosed(NegotiationError):
    pass


class AlreadyResponded(NegotiationError):
    pass


class NotAParty(NegotiationError):
    pass


def respond(
    session: NegotiationSession,
    party: str,
    verdict: Verdict,
    table: PriorityTable,
) -> tuple[NegotiationSession, NegotiationOutcome | None]:
    """Record one party's verdict; returns the terminal outcome if any.

    All parties accepting installs the proposed clause. A rejection ends
    an SPC session with the standing clause kept, and escalates an HCC
    session to the most authoritative user.
    """
    if session.state is not SessionState.OPEN:
        raise SessionClosed(f"session {session.id} is {session.state.value}")
    if party not in session.parties:
        raise NotAParty(f"{party!r} is not a party to session {session.id}")
    if session.response_of(party) is not Verdict.PENDING:
        raise AlreadyResponded(f"{party!r} already responded to session {session.id}")
    if verdict not in (Verdict.ACCEPT, Verdict.REJECT):
        raise NegotiationError(f"verdict must be accept or reject, got {verdict}")

    responses = tuple(
        (p, verdict if p == party else v) for p, v in session.responses
    )

    if verdict is Verdict.REJECT:
        if session.kind is ConflictClass.SPC:
            updated = replace(session, responses=responses, state=SessionState.REJECTED)
            return updated, None   # the standing clause simply remains in force
        target = _escalation_target(table)
        updated = replace(session, responses=responses, state=SessionState.ESCALATED)
        outcome = Escalated(
            to=target,
            reason=f"proposal rejected by {party}",
            notices=((target, f"negotiation on {session.proposed_clause.device} "
                              f"failed: decide the policy"),),
        )
        return updated, outcome

    if all(v is Verdict.ACCEPT for p, v in responses):
        updated = replace(session, responses=responses, state=SessionState.AGREED)
        retired = (session.standing_clause,) if session.standing_clause is not None else ()
        notices = tuple(
            (p, f"agreed policy installed on {session.proposed_clause.device}")
            for p in session.parties
        )
        return updated, Resolved(session.proposed_clause, retired=retired, notices=notices)

    return replace(session, responses=responses), None


def expire_sessions(
    sessions: list[NegotiationSession], clock: int, table: PriorityTable
) -> list[tuple[NegotiationSession, Escalated]]:
    """Escalate open sessions whose offer lifetime has passed."""
    out = []
    for session in sessions:
        if session.state is SessionState.OPEN and session.expires_at is not None \
                and session.expires_at <= clock:
            target = _escalation_target(table)
            updated = replace(session, state=SessionState.ESCALATED)
            out.append((updated, Escalated(
                to=target,
                reason=f"session {session.id} expired unanswered",
                notices=((target, f"negotiation on {session.proposed_clause.device} "
                                  f"expired: decide the policy"),),
            )))
    return out
