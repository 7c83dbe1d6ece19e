"""Multi-user smart-home access control engine.

Policy language parsing, priority-based conflict negotiation, ABAC rule
generation, command enforcement, and a deterministic simulation harness.
"""

from .model import (
    Action,
    AllowedRegion,
    Condition,
    ConditionOp,
    DeviceDescriptor,
    DevicePolicy,
    DeviceKind,
    DomainRegistry,
    GENERAL,
    IntervalDomain,
    IntervalRegion,
    PolicyClause,
    PriorityEntry,
    PriorityTable,
    SUBJECT_ALL,
    TokenDomain,
    TokenRegion,
    UserRecord,
    allowed_region,
    clause_from_device_policy,
    normalize,
    standard_devices,
)
from .policy_lang import (
    ClauseAst,
    ConditionAst,
    ParseDiagnostic,
    PolicySource,
    parse_condition,
    parse_policy_set,
    render_clause,
)
from .conflict import ConflictClass, ConflictReport, classify, interfere, scan
from .negotiation import (
    NegotiationSession,
    Escalated,
    Proposal,
    Resolved,
    average_conditions,
    majority_vote,
    merge_soft,
    negotiate,
    respond,
)
from .abac import AbacRule, Effect, RuleTable, generate_rule, rebuild_table
from .enforcement import (
    Decision,
    DeviceCommand,
    Origin,
    ThreatTag,
    Verb,
    VerdictKind,
    authorize,
)
from .engine import Engine, EngineConfig

__version__ = "0.1.0"
