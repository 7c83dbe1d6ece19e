"""Deterministic scenario harness.

A scenario script is a JSON document: a device roster, a user roster
(first entry is the owner at class 0), a time-ordered event list, and
expectations evaluated immediately after the event they reference. Runs
are fully deterministic apart from wall-clock latency measurements,
which are taken around decision and negotiation calls only.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from pathlib import Path

from .engine import Engine, EngineConfig, PermissionDenied
from .enforcement import DeviceCommand
from .model import (
    DeviceDescriptor,
    DeviceKind,
    DevicePolicy,
    IntervalRegion,
    UserRecord,
    ValueAttribute,
)
from .store import Store


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioScript:
    name: str
    users: tuple[dict, ...]
    events: tuple[dict, ...]
    expectations: tuple[dict, ...]
    devices: tuple[DeviceDescriptor, ...] | None = None   # None = standard roster
    description: str = ""
    declared_counts: dict | None = None
    config: dict | None = None

    @staticmethod
    def from_doc(doc: dict) -> "ScenarioScript":
        events = tuple(doc.get("events", ()))
        times = [e.get("at", 0) for e in events]
        if times != sorted(times):
            raise ScenarioError("events must be sorted by time")
        expectations = tuple(doc.get("expect", ()))
        for exp in expectations:
            idx = exp.get("event")
            if not isinstance(idx, int) or not (0 <= idx < max(len(events), 1)):
                raise ScenarioError(f"expectation references missing event: {exp}")
        devices = None
        if isinstance(doc.get("devices"), list):
            devices = tuple(DeviceDescriptor.from_doc(d) for d in doc["devices"])
        return ScenarioScript(
            name=doc.get("name", "unnamed"),
            users=tuple(doc.get("users", ())),
            events=events,
            expectations=expectations,
            devices=devices,
            description=doc.get("description", ""),
            declared_counts=doc.get("declared_counts"),
            config=doc.get("config"),
        )

    @staticmethod
    def load(path: str | Path) -> "ScenarioScript":
        with open(path, encoding="utf-8") as fh:
            return ScenarioScript.from_doc(json.load(fh))

    def to_doc(self) -> dict:
        doc: dict = {
            "name": self.name,
            "users": list(self.users),
            "events": list(self.events),
            "expect": list(self.expectations),
        }
        if self.devices is not None:
            doc["devices"] = [d.to_doc() for d in self.devices]
        if self.description:
            doc["description"] = self.description
        if self.declared_counts:
            doc["declared_counts"] = self.declared_counts
        if self.config:
            doc["config"] = self.config
        return doc


@dataclass
class LatencyStats:
    samples: list[float] = field(default_factory=list)

    def add(self, seconds: float) -> None:
        self.samples.append(seconds)

    def to_doc(self) -> dict:
        if not self.samples:
            return {"count": 0, "min_ms": None, "mean_ms": None, "max_ms": None}
        ms = [s * 1000 for s in self.samples]
        return {
            "count": len(ms),
            "min_ms": round(min(ms), 4),
            "mean_ms": round(sum(ms) / len(ms), 4),
            "max_ms": round(max(ms), 4),
        }

    @property
    def mean_seconds(self) -> float:
        return sum(self.samples) / len(self.samples) if self.samples else 0.0


@dataclass
class RunReport:
    name: str
    results: list[dict]
    conflict_counts: dict[str, int]
    decision_latency: LatencyStats
    negotiation_latency: LatencyStats
    engine: Engine | None = None     # the live engine, for replay checks

    @property
    def total(self) -> int:
        return len(self.results)

    @property
    def passed(self) -> int:
        return sum(1 for r in self.results if r["passed"])

    @property
    def success_rate(self) -> float:
        return self.passed / self.total if self.total else 1.0

    @property
    def all_passed(self) -> bool:
        return self.passed == self.total

    def to_doc(self) -> dict:
        return {
            "name": self.name,
            "total": self.total,
            "passed": self.passed,
            "success_rate": self.success_rate,
            "conflict_counts": dict(sorted(self.conflict_counts.items())),
            "decision_latency": self.decision_latency.to_doc(),
            "negotiation_latency": self.negotiation_latency.to_doc(),
            "results": self.results,
        }


def _engine_for(script: ScenarioScript, store: Store | None) -> Engine:
    cfg = EngineConfig(**(script.config or {}))
    engine = Engine(store=store, devices=script.devices, config=cfg)
    for i, spec in enumerate(script.users):
        user = spec["user"]
        if i == 0:
            if spec.get("class", 0) != 0:
                raise ScenarioError("the first roster user must be the class-0 owner")
            engine.bootstrap(user, role=spec.get("role"))
            continue
        engine.add_user(UserRecord(
            commander=spec.get("by", script.users[0]["user"]),
            user=user,
            priority=spec["class"],
            device_perm=spec.get("device_perm", False),
            validity=spec.get("validity"),
            role=spec.get("role"),
        ))
    return engine


def _execute(engine: Engine, event: dict, report: RunReport) -> dict:
    """Apply one scripted event; returns the observation for expectations."""
    kind = event["type"]
    before_notes = len(engine.state.notifications)
    obs: dict = {"verdict": None, "tag": None, "conflicts": [], "sessions": []}

    if kind == "add_user":
        try:
            result = engine.add_user(UserRecord.from_doc(event["record"]))
            obs["verdict"] = "allow" if result.accepted else "deny"
            if result.pending is not None:
                obs["pending"] = result.pending.user
        except PermissionDenied as err:
            obs["verdict"], obs["tag"] = "deny", err.tag.value if err.tag else None
    elif kind == "submit_policy":
        start = time.perf_counter()
        if "text" in event:
            result = engine.submit_policy_text(event["text"])
        else:
            result = engine.submit_device_policy(DevicePolicy.from_doc(event["device_policy"]))
        report.negotiation_latency.add(time.perf_counter() - start)
        obs["conflicts"] = [r.conflict_class.value for r in result.reports]
        obs["sessions"] = list(result.sessions)
        obs["diagnostics"] = len(result.diagnostics)
        for klass in obs["conflicts"]:
            report.conflict_counts[klass] = report.conflict_counts.get(klass, 0) + 1
    elif kind == "respond":
        sid = event.get("session", "latest")
        if sid == "latest":
            sid = max(engine.state.sessions) if engine.state.sessions else 0
        session = engine.respond(sid, event["party"], event["verdict"])
        obs["session_state"] = session.state.value
        obs["session"] = sid
    elif kind == "command":
        cmd = DeviceCommand.from_doc(event["command"])
        start = time.perf_counter()
        decision = engine.command(cmd)
        report.decision_latency.add(time.perf_counter() - start)
        obs["verdict"] = decision.verdict.value
        obs["tag"] = decision.threat_tag.value if decision.threat_tag else None
    elif kind == "set_presence":
        engine.set_presence(event["user"], event["state"])
    elif kind == "advance_clock":
        engine.advance_clock(to=event.get("to", event.get("at", engine.clock)))
    elif kind == "add_device":
        decision = engine.add_device(DeviceDescriptor.from_doc(event["device"]), event["by"])
        obs["verdict"] = decision.verdict.value
        obs["tag"] = decision.threat_tag.value if decision.threat_tag else None
    elif kind == "remove_device":
        decision = engine.remove_device(event["device_id"], event["by"])
        obs["verdict"] = decision.verdict.value
        obs["tag"] = decision.threat_tag.value if decision.threat_tag else None
    else:
        raise ScenarioError(f"unknown event type {kind!r}")

    obs["notified"] = sorted({
        n["recipient"] for n in engine.state.notifications[before_notes:]})
    return obs


def _enforced_spans(engine: Engine, device: str, attribute: str) -> list[list[list[int]]]:
    """Per enforced clause on the device: the attribute's region spans."""
    out = []
    for cid in engine.state.enforced:
        clause = engine.state.clauses[cid]
        if clause.device != device:
            continue
        cond = clause.condition_for(attribute)
        if cond is None:
            continue
        region = cond.region_over(engine.domains.domain_for(attribute))
        assert isinstance(region, IntervalRegion)
        out.append([list(s) for s in region.spans])
    return out


def _check(expect: dict, obs: dict, engine: Engine) -> tuple[bool, str]:
    if "conflicts" in expect:
        want = sorted(expect["conflicts"])
        got = sorted(obs.get("conflicts", []))
        if got != want:
            return False, f"conflicts {got} != {want}"
    if "verdict" in expect and obs.get("verdict") != expect["verdict"]:
        return False, f"verdict {obs.get('verdict')} != {expect['verdict']}"
    if "tag" in expect and obs.get("tag") != expect["tag"]:
        return False, f"tag {obs.get('tag')} != {expect['tag']}"
    if "notified" in expect:
        wanted = expect["notified"]
        wanted = [wanted] if isinstance(wanted, str) else wanted
        missing = [w for w in wanted if w not in obs.get("notified", [])]
        if missing:
            return False, f"not notified: {missing}"
    if "session_state" in expect:
        sid = obs.get("session") or (max(engine.state.sessions) if engine.state.sessions else None)
        if sid is None:
            return False, "no session to inspect"
        got = engine.state.sessions[sid].state.value
        if got != expect["session_state"]:
            return False, f"session state {got} != {expect['session_state']}"
    if "sessions_open" in expect:
        got = len(engine.open_sessions())
        if got != expect["sessions_open"]:
            return False, f"{got} open sessions != {expect['sessions_open']}"
    if "proposal_spans" in expect:
        if not engine.state.sessions:
            return False, "no session opened"
        session = engine.state.sessions[max(engine.state.sessions)]
        attr = expect.get("attribute", "temperature")
        cond = next((c for c in session.proposal if c.attribute == attr), None)
        if cond is None:
            return False, f"proposal has no {attr} condition"
        region = cond.region_over(engine.domains.domain_for(attr))
        got = [list(s) for s in region.spans]
        if got != expect["proposal_spans"]:
            return False, f"proposal {got} != {expect['proposal_spans']}"
    if "enforced" in expect:
        want = expect["enforced"]
        spans = _enforced_spans(engine, want["device"], want.get("attribute", "temperature"))
        if want.get("spans") not in spans:
            return False, f"no enforced rule with spans {want.get('spans')}; have {spans}"
    if "not_enforced" in expect:
        want = expect["not_enforced"]
        spans = _enforced_spans(engine, want["device"], want.get("attribute", "temperature"))
        if want.get("spans") in spans:
            return False, f"unexpected enforced spans {want.get('spans')}"
    if "enforced_count" in expect:
        got = len(engine.state.enforced)
        if got != expect["enforced_count"]:
            return False, f"{got} enforced rules != {expect['enforced_count']}"
    if "user_absent" in expect and engine.state.users.has(expect["user_absent"]):
        return False, f"{expect['user_absent']} still present"
    if "user_present" in expect and not engine.state.users.has(expect["user_present"]):
        return False, f"{expect['user_present']} absent"
    if "user_class" in expect:
        user, cls = expect["user_class"]
        if not engine.state.users.has(user) or engine.state.users.cls_of(user) != cls:
            return False, f"{user} not at class {cls}"
    if "pending_user" in expect and expect["pending_user"] not in engine.state.pending_users:
        return False, f"{expect['pending_user']} not pending"
    return True, "ok"


def run(script: ScenarioScript, store: Store | None = None) -> RunReport:
    """Execute a scenario; the report carries one line per expectation."""
    report = RunReport(
        name=script.name, results=[], conflict_counts={},
        decision_latency=LatencyStats(), negotiation_latency=LatencyStats(),
    )
    engine = _engine_for(script, store)
    by_event: dict[int, list[tuple[int, dict]]] = {}
    for i, expect in enumerate(script.expectations):
        by_event.setdefault(expect["event"], []).append((i, expect))

    for idx, event in enumerate(script.events):
        at = event.get("at", engine.clock)
        if at > engine.clock:
            engine.advance_clock(to=at)
        obs = _execute(engine, event, report)
        for exp_index, expect in by_event.get(idx, ()):
            passed, detail = _check(expect, obs, engine)
            report.results.append({
                "expectation": exp_index,
                "event": idx,
                "passed": passed,
                "detail": detail,
            })
    report.engine = engine
    return report


# ---------------------------------------------------------------------------
# Synthetic load generation
# ---------------------------------------------------------------------------

_KIND_CYCLE = (
    ("thermostat", DeviceKind.THERMOSTAT, ("temperature", 50, 90)),
    ("lock", DeviceKind.LOCK, None),
    ("bulb", DeviceKind.LIGHT, ("level", 0, 100)),
    ("camera", DeviceKind.CAMERA, None),
)


def generate_load(
    n_policies: int, n_users: int, n_devices: int, seed: int, n_commands: int = 50
) -> ScenarioScript:
    """Seeded synthetic script for latency-scaling runs."""
    if min(n_policies, n_users, n_devices) < 1:
        raise ScenarioError("load parameters must be at least 1")
    rng = random.Random(seed)

    users = [{"user": "owner", "class": 0, "role": "owner"}]
    for i in range(1, n_users):
        users.append({"user": f"user_{i}", "class": 1 + (i - 1) % 3, "by": "owner"})
    names = [u["user"] for u in users]

    devices = []
    for i in range(n_devices):
        label, kind, value = _KIND_CYCLE[i % len(_KIND_CYCLE)]
        if value is None:
            devices.append(DeviceDescriptor(f"{label}_{i}", kind, True))
        else:
            devices.append(DeviceDescriptor(
                f"{label}_{i}", kind, False, ValueAttribute(*value)))
    ranged = [d for d in devices if d.value_attribute is not None]

    events: list[dict] = []
    for _ in range(n_policies):
        device = rng.choice(ranged)
        va = device.value_attribute
        lo = rng.randrange(va.low, va.high)
        hi = rng.randrange(lo, va.high + 1)
        owner = rng.choice(names)
        events.append({
            "at": 0, "type": "submit_policy",
            "text": f"@{owner}\ndemand :: ~ : {device.id} : {va.name} in [{lo}-{hi}] ;",
        })
    for _ in range(n_commands):
        device = rng.choice(ranged)
        va = device.value_attribute
        events.append({
            "at": 0, "type": "command",
            "command": {
                "actor": rng.choice(names), "device": device.id, "verb": "set_value",
                "attribute": va.name, "value": rng.randrange(va.low, va.high + 1),
            },
        })
    return ScenarioScript(
        name=f"load-p{n_policies}-u{n_users}-d{n_devices}-s{seed}",
        users=tuple(users),
        events=tuple(events),
        expectations=(),
        devices=tuple(devices),
        description="synthetic load for latency shape checks",
    )


def format_report(report: RunReport) -> str:
    lines = [f"scenario: {report.name}",
             f"expectations: {report.passed}/{report.total} passed "
             f"({report.success_rate:.0%})"]
    if report.conflict_counts:
        counts = ", ".join(f"{k}={v}" for k, v in sorted(report.conflict_counts.items()))
        lines.append(f"conflicts: {counts}")
    dl = report.decision_latency.to_doc()
    if dl["count"]:
        lines.append(f"decision latency ms: min={dl['min_ms']} mean={dl['mean_ms']} "
                     f"max={dl['max_ms']} n={dl['count']}")
    nl = report.negotiation_latency.to_doc()
    if nl["count"]:
        lines.append(f"negotiation latency ms: min={nl['min_ms']} mean={nl['mean_ms']} "
                     f"max={nl['max_ms']} n={nl['count']}")
    for r in report.results:
        mark = "PASS" if r["passed"] else "FAIL"
        lines.append(f"  [{mark}] event {r['event']} expectation {r['expectation']}: "
                     f"{r['detail']}")
    return "\n".join(lines)
