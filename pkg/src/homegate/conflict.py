"""Pairwise conflict detection and five-way classification.

Two clauses *interfere* when their effective subject sets intersect and
they target the same device. Interfering pairs split into:

* restriction conflicts (RC): exactly one clause restricts, and the
  restricting owner strictly outranks the other owner;
* hard conflicts: opposite actions whose common attributes all overlap,
  or same actions with some disjoint common attribute;
* soft conflicts: same actions whose common attributes all overlap, or
  opposite actions with some differing common attribute.

Hard and soft then split by authority: different classes give priority
conflicts (HPC/SPC), equal classes competition conflicts (HCC/SCC).
Precedence is RC over hard over soft; the quantifiers over an empty
common-attribute set are vacuous (forall true, exists false).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .model import (
    Action,
    AllowedRegion,
    DomainRegistry,
    ModelError,
    PolicyClause,
    PriorityTable,
    Region,
    SUBJECT_ALL,
    allowed_region,
    clause_class,
)


class ConflictClass(str, Enum):
    NONE = "none"
    HPC = "HPC"   # hard priority conflict
    SPC = "SPC"   # soft priority conflict
    HCC = "HCC"   # hard competition conflict
    SCC = "SCC"   # soft competition conflict
    RC = "RC"     # restriction conflict


@dataclass(frozen=True)
class OverlapDetail:
    attribute: str
    overlap: bool
    region_i: Region | None = None
    region_j: Region | None = None


@dataclass(frozen=True)
class ConflictReport:
    clause_i: int
    clause_j: int
    conflict_class: ConflictClass
    details: tuple[OverlapDetail, ...] = ()

    def to_doc(self) -> dict:
        return {
            "clause_i": self.clause_i,
            "clause_j": self.clause_j,
            "class": self.conflict_class.value,
            "attributes": [
                {"attribute": d.attribute, "overlap": d.overlap} for d in self.details
            ],
        }

    @staticmethod
    def from_doc(doc: dict) -> "ConflictReport":
        return ConflictReport(
            clause_i=int(doc["clause_i"]),
            clause_j=int(doc["clause_j"]),
            conflict_class=ConflictClass(doc["class"]),
            details=tuple(
                OverlapDetail(d["attribute"], bool(d["overlap"]))
                for d in doc.get("attributes", ())
            ),
        )


def _subject_view(clause: PolicyClause) -> tuple[bool, frozenset[str]]:
    """(covers_all, excluded-or-singleton).

    A restrict clause on all users exempts its own owners (a general
    restriction must not lock out its author); demand clauses on all
    users include everyone.
    """
    if clause.subject != SUBJECT_ALL:
        return False, frozenset({clause.subject})
    if clause.action is Action.RESTRICT:
        return True, frozenset(clause.owners)
    return True, frozenset()


def effective_subjects(clause: PolicyClause, users: Iterable[str]) -> frozenset[str]:
    """Concrete subject set over a known user universe."""
    covers_all, detail = _subject_view(clause)
    if not covers_all:
        return detail
    return frozenset(users) - detail


def interfere(
    ci: PolicyClause, cj: PolicyClause, users: Iterable[str] | None = None
) -> bool:
    """Same device, intersecting subjects, distinct owners.

    Without a concrete user universe, two all-subject clauses are assumed
    to share at least one subject.
    """
    if ci.device != cj.device:
        return False
    if set(ci.owners) & set(cj.owners):
        # A user's own clauses never negotiate against each other.
        return False
    all_i, detail_i = _subject_view(ci)
    all_j, detail_j = _subject_view(cj)
    if all_i and all_j:
        if users is None:
            return True
        return bool(frozenset(users) - (detail_i | detail_j))
    if all_i:
        return not (detail_j <= detail_i)
    if all_j:
        return not (detail_i <= detail_j)
    return detail_i == detail_j


def overlap_theta(x: AllowedRegion, y: AllowedRegion) -> bool:
    """True iff the two regions of the same attribute intersect."""
    if x.attribute != y.attribute:
        raise ModelError(f"attribute mismatch: {x.attribute} vs {y.attribute}")
    return x.region.overlaps(y.region)


def _common_details(
    ci: PolicyClause, cj: PolicyClause, domains: DomainRegistry
) -> tuple[OverlapDetail, ...]:
    common = sorted(ci.condition_keys() & cj.condition_keys())
    details = []
    for key in common:
        domain = domains.domain_for(key)
        ri = allowed_region(ci, key, domain)
        rj = allowed_region(cj, key, domain)
        details.append(OverlapDetail(key, overlap_theta(ri, rj), ri.region, rj.region))
    return tuple(details)


def classify(
    ci: PolicyClause,
    cj: PolicyClause,
    table: PriorityTable,
    domains: DomainRegistry | None = None,
    users: Iterable[str] | None = None,
) -> ConflictClass:
    """Classify one pair; NONE when the clauses do not interfere."""
    domains = domains or DomainRegistry()
    if users is None:
        users = table.users()
    if not interfere(ci, cj, users):
        return ConflictClass.NONE

    cls_i = clause_class(ci, table)
    cls_j = clause_class(cj, table)

    if ci.action is not cj.action:
        restricter, other = (cls_i, cls_j) if ci.action is Action.RESTRICT else (cls_j, cls_i)
        if restricter < other:
            return ConflictClass.RC

    details = _common_details(ci, cj, domains)
    same_action = ci.action is cj.action
    all_overlap = all(d.overlap for d in details)
    some_disjoint = any(not d.overlap for d in details)
    some_differ = any(d.region_i != d.region_j for d in details)

    hard = (not same_action and all_overlap) or (same_action and some_disjoint)
    soft = (same_action and all_overlap) or (not same_action and some_differ)

    if hard:
        return ConflictClass.HPC if cls_i != cls_j else ConflictClass.HCC
    if soft:
        return ConflictClass.SPC if cls_i != cls_j else ConflictClass.SCC
    return ConflictClass.NONE


def scan(
    policies: list[PolicyClause],
    table: PriorityTable,
    domains: DomainRegistry | None = None,
) -> list[ConflictReport]:
    """One report per unordered interfering pair, ordered by clause ids.

    Restriction conflicts put the restricting clause in the ``i`` slot.
    """
    domains = domains or DomainRegistry()
    users = table.users()
    reports: list[ConflictReport] = []
    ordered = sorted(policies, key=lambda c: c.id)
    for a in range(len(ordered)):
        for b in range(a + 1, len(ordered)):
            ci, cj = ordered[a], ordered[b]
            klass = classify(ci, cj, table, domains, users)
            if klass is ConflictClass.NONE:
                continue
            if klass is ConflictClass.RC and ci.action is not Action.RESTRICT:
                ci, cj = cj, ci
            reports.append(
                ConflictReport(ci.id, cj.id, klass, _common_details(ci, cj, domains))
            )
    return reports
