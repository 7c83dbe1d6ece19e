"""Operator command line.

Subcommands: serve the HTTP API, lint policy files, run an offline
negotiation over a policy file, replay scenario scripts, evaluate a
single command document, and summarize a store directory. Exit codes:
0 success, 1 parse/expectation/check failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path

from .engine import Engine, EngineError, PermissionDenied
from .enforcement import DeviceCommand
from .model import ModelError, UserRecord
from .policy_lang import Severity, parse_policy_set, render_clause
from .simulator import ScenarioScript, format_report, run as run_scenario
from .store import Store, canonical_json

#: policy-file directive: "#! user <id> class <n> [device_perm] [validity <sec>]"
_DIRECTIVE = re.compile(
    r"^#!\s*user\s+(?P<user>\w+)\s+class\s+(?P<cls>\d+)"
    r"(?P<perm>\s+device_perm)?(?:\s+validity\s+(?P<validity>\d+))?\s*$")


def _read_directives(text: str) -> list[dict]:
    out = []
    for line in text.splitlines():
        m = _DIRECTIVE.match(line.strip())
        if m:
            out.append({
                "user": m.group("user"),
                "class": int(m.group("cls")),
                "device_perm": bool(m.group("perm")),
                "validity": int(m.group("validity")) if m.group("validity") else None,
            })
    return out


def _emit(doc: dict, as_json: bool, human: str) -> None:
    if as_json:
        print(canonical_json(doc))
    else:
        print(human)


def cmd_parse(args) -> int:
    text = Path(args.file).read_text(encoding="utf-8")
    clauses, diagnostics = parse_policy_set(text)
    if args.json:
        print(canonical_json({
            "clauses": [render_clause(c) for c in clauses],
            "diagnostics": [
                {"line": d.line, "column": d.column, "message": d.message,
                 "severity": d.severity.value} for d in diagnostics
            ],
        }))
    else:
        for d in diagnostics:
            print(f"{args.file}:{d}")
        print(f"{len(clauses)} clause(s), {len(diagnostics)} diagnostic(s)")
    has_errors = any(d.severity is Severity.ERROR for d in diagnostics)
    return 1 if has_errors else 0


def _engine_from_policy_file(text: str) -> Engine:
    engine = Engine()
    directives = _read_directives(text)
    if not directives:
        raise EngineError("policy file declares no users "
                          "(add '#! user <id> class <n>' directives)")
    owners = [d for d in directives if d["class"] == 0]
    if not owners:
        raise EngineError("one '#! user <id> class 0' owner directive is required")
    engine.bootstrap(owners[0]["user"])
    for d in directives:
        if d["user"] == owners[0]["user"]:
            continue
        engine.add_user(UserRecord(
            commander=owners[0]["user"], user=d["user"], priority=d["class"],
            device_perm=d["device_perm"], validity=d["validity"]))
    return engine


def cmd_negotiate(args) -> int:
    text = Path(args.file).read_text(encoding="utf-8")
    try:
        engine = _engine_from_policy_file(text)
        result = engine.submit_policy_text(text)
    except (EngineError, ModelError, PermissionDenied) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    if any(d.severity is Severity.ERROR for d in result.diagnostics):
        for d in result.diagnostics:
            print(f"{args.file}:{d}", file=sys.stderr)
        return 1

    lines = []
    for report in result.reports:
        winner = None
        for cid in (report.clause_i, report.clause_j):
            if cid in engine.state.enforced:
                winner = engine.state.clauses[cid]
        label = report.conflict_class.value
        if winner is not None:
            lines.append(f"{label} -> clause of {'/'.join(winner.owners)} stands")
        elif result.sessions:
            lines.append(f"{label} -> proposal opened")
        else:
            lines.append(f"{label} -> escalated")
    table_lines = [
        f"  {r.id}: {r.effect.value} {r.subject} on {r.resource} "
        f"[{', '.join(c.attribute for c in r.constraints) or 'unconditional'}]"
        for r in engine.rule_table.rules
    ]
    if args.json:
        print(canonical_json({
            "conflicts": [r.to_doc() for r in result.reports],
            "outcomes": lines,
            "sessions": [engine.state.sessions[s].to_doc() for s in result.sessions],
            "rules": engine.rule_table.to_doc(),
        }))
    else:
        print("\n".join(lines) if lines else "no conflicts")
        print("rule table:")
        print("\n".join(table_lines) if table_lines else "  (empty)")
    return 0


def cmd_run_scenario(args) -> int:
    try:
        script = ScenarioScript.load(args.file)
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    report = run_scenario(script)
    if args.json:
        print(canonical_json(report.to_doc()))
    else:
        print(format_report(report))
    if args.report:
        Path(args.report).write_text(canonical_json(report.to_doc()), encoding="utf-8")
    return 0 if report.all_passed else 1


def cmd_check(args) -> int:
    raw = sys.stdin.read() if args.command_doc == "-" else Path(args.command_doc).read_text()
    doc = json.loads(raw)
    if args.store_dir:
        engine = Engine(store=Store(args.store_dir))
    else:
        engine = Engine()
        engine.bootstrap(doc.get("actor", "owner"))
    try:
        decision = engine.command(DeviceCommand.from_doc(doc))
    except EngineError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    _emit(decision.to_doc(), args.json,
          f"{decision.verdict.value}"
          + (f" [{decision.threat_tag.value}]" if decision.threat_tag else "")
          + (f" ({decision.reason})" if decision.reason else ""))
    return 0


def cmd_report(args) -> int:
    store = Store(args.store_dir)
    events = store.events()
    kinds: dict[str, int] = {}
    verdicts: dict[str, int] = {}
    tags: dict[str, int] = {}
    conflicts: dict[str, int] = {}
    for event in events:
        kinds[event.kind] = kinds.get(event.kind, 0) + 1
        if event.kind == "command_decided":
            verdict = event.payload["decision"]["verdict"]
            verdicts[verdict] = verdicts.get(verdict, 0) + 1
            tag = event.payload["decision"].get("threat_tag")
            if tag:
                tags[tag] = tags.get(tag, 0) + 1
        elif event.kind == "conflict_detected":
            klass = event.payload["report"]["class"]
            conflicts[klass] = conflicts.get(klass, 0) + 1
    doc = {
        "events": len(events),
        "by_kind": dict(sorted(kinds.items())),
        "decisions": dict(sorted(verdicts.items())),
        "threat_tags": dict(sorted(tags.items())),
        "conflicts": dict(sorted(conflicts.items())),
    }
    if args.json:
        print(canonical_json(doc))
    else:
        print(f"events: {doc['events']}")
        for section in ("by_kind", "decisions", "threat_tags", "conflicts"):
            if doc[section]:
                rows = ", ".join(f"{k}={v}" for k, v in doc[section].items())
                print(f"{section}: {rows}")
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    frontend = args.frontend or _default_frontend()
    serve(args.addr, args.store_dir, frontend_dir=frontend)
    return 0


def _default_frontend() -> str | None:
    dist = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return str(dist) if dist.is_dir() else None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="homegate",
        description="multi-user smart-home access control engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--addr", default=os.environ.get("ADDR", "127.0.0.1:8008"))
    p.add_argument("--store-dir", default=os.environ.get("STORE_DIR"))
    p.add_argument("--frontend", default=None, help="static UI directory")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("parse", help="lint a policy file")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("negotiate", help="offline negotiation over a policy file")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_negotiate)

    p = sub.add_parser("run-scenario", help="replay a scenario script")
    p.add_argument("file")
    p.add_argument("--report", default=None, help="write the report document here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_run_scenario)

    p = sub.add_parser("check", help="evaluate one command document")
    p.add_argument("command_doc", help="path to a JSON command, or - for stdin")
    p.add_argument("--store-dir", default=os.environ.get("STORE_DIR"))
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("report", help="summarize a store directory")
    p.add_argument("--store-dir", default=os.environ.get("STORE_DIR"), required=False)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
