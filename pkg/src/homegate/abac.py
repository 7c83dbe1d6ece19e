"""Translate negotiated clauses into enforceable attribute-based rules.

A demand clause becomes a permit-shaped rule, a restrict clause a
deny-shaped one; constraints carry the clause's conditions unchanged.
The rule table orders deny-shaped rules ahead of permit-shaped ones so
enforcement is deny-overrides by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .model import Action, Condition, PolicyClause, SUBJECT_ALL


class Effect(str, Enum):
    PERMIT = "permit"
    DENY = "deny"


@dataclass(frozen=True)
class AbacRule:
    id: str
    effect: Effect
    subject: str            # user id or SUBJECT_ALL
    resource: str           # device id
    constraints: tuple[Condition, ...]
    owners: tuple[str, ...]
    source_clauses: tuple[int, ...]

    def constraint_for(self, key: str) -> Condition | None:
        for c in self.constraints:
            if c.key == key:
                return c
        return None

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "effect": self.effect.value,
            "subject": self.subject,
            "resource": self.resource,
            "constraints": [c.to_doc() for c in self.constraints],
            "owners": list(self.owners),
            "source_clauses": list(self.source_clauses),
        }


def generate_rule(clause: PolicyClause) -> AbacRule:
    """Field-for-field mapping of a negotiated clause onto a rule."""
    effect = Effect.PERMIT if clause.action is Action.DEMAND else Effect.DENY
    return AbacRule(
        id=f"rule-{clause.id}",
        effect=effect,
        subject=clause.subject,
        resource=clause.device,
        constraints=clause.conditions,
        owners=clause.owners,
        source_clauses=(clause.id,) + clause.parents,
    )


@dataclass(frozen=True)
class RuleTable:
    """Deny-shaped rules first, then permit-shaped, in clause-id order."""

    rules: tuple[AbacRule, ...] = ()

    def lookup(self, subject: str, resource: str) -> tuple[AbacRule, ...]:
        """Rules applying to a concrete subject on a resource.

        All-subject rules show up for every concrete subject.
        """
        return tuple(
            r for r in self.rules
            if r.resource == resource and (r.subject == subject or r.subject == SUBJECT_ALL)
        )

    def for_resource(self, resource: str) -> tuple[AbacRule, ...]:
        return tuple(r for r in self.rules if r.resource == resource)

    def rule(self, rule_id: str) -> AbacRule | None:
        for r in self.rules:
            if r.id == rule_id:
                return r
        return None

    def to_doc(self) -> dict:
        return {"rules": [r.to_doc() for r in self.rules]}


def rebuild_table(resolved: list[PolicyClause]) -> RuleTable:
    """Deterministic table over the enforced clause set."""
    rules = [generate_rule(c) for c in resolved]
    rules.sort(key=lambda r: (0 if r.effect is Effect.DENY else 1, r.source_clauses[0]))
    return RuleTable(tuple(rules))
