"""HTTP facade over the engine.

Thin JSON-document endpoints mirroring the domain types; every mutation
funnels through the single engine behind one lock, and every response is
re-derivable from engine state (the UI holds nothing authoritative).
Denied requests answer 403 with the decision (threat tag included);
pending user resolutions answer 409.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import Body, FastAPI, Query, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .engine import Engine, EngineError, PermissionDenied, UnknownEntity
from .enforcement import DeviceCommand
from .model import DeviceDescriptor, DevicePolicy, ModelError, UserRecord
from .negotiation import (
    AlreadyResponded,
    NegotiationError,
    NotAParty,
    SessionClosed,
)
from .policy_lang import parse_policy_set


def _error(status: int, message: str, **extra) -> JSONResponse:
    return JSONResponse({"error": message, **extra}, status_code=status)


def create_app(engine: Engine, frontend_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="homegate", version="0.1.0")
    lock = threading.Lock()

    @app.exception_handler(UnknownEntity)
    async def _unknown(request: Request, err: UnknownEntity):
        return _error(404, str(err))

    @app.exception_handler(PermissionDenied)
    async def _denied(request: Request, err: PermissionDenied):
        return _error(403, str(err), threat_tag=err.tag.value if err.tag else None)

    @app.exception_handler(EngineError)
    async def _bad(request: Request, err: EngineError):
        return _error(400, str(err))

    @app.exception_handler(ModelError)
    async def _model(request: Request, err: ModelError):
        return _error(400, str(err))

    @app.exception_handler(ValueError)
    async def _malformed(request: Request, err: ValueError):
        return _error(400, f"malformed body: {err}")

    @app.exception_handler(KeyError)
    async def _missing(request: Request, err: KeyError):
        return _error(400, f"malformed body: missing field {err}")

    # -- users ------------------------------------------------------------

    @app.post("/users", status_code=201)
    def post_users(body: dict = Body(...)):
        with lock:
            if not engine.state.users.entries and "commander" not in body:
                engine.bootstrap(body["user"], role=body.get("role"))
                return {"user": body["user"],
                        "entry": engine.state.users.entry(body["user"]).to_doc()}
            record = UserRecord.from_doc(body)
            result = engine.add_user(record)
            if result.pending is not None:
                return JSONResponse(
                    {"pending": result.pending.to_doc()}, status_code=409)
            if result.ignored:
                return JSONResponse({
                    "user": record.user, "ignored": True,
                    "entry": engine.state.users.entry(record.user).to_doc(),
                }, status_code=200)
            return {"user": record.user,
                    "entry": engine.state.users.entry(record.user).to_doc()}

    @app.get("/users")
    def get_users():
        return {
            "users": engine.state.users.to_doc(),
            "pending": {u: p.to_doc() for u, p in engine.state.pending_users.items()},
        }

    @app.post("/users/{user}/resolve")
    def post_resolve(user: str, body: dict = Body(...)):
        with lock:
            engine.resolve_pending_user(user, int(body["class"]), body["by"])
            return {"user": user, "entry": engine.state.users.entry(user).to_doc()}

    @app.delete("/users/{user}")
    def delete_user(user: str, by: str = Query(...)):
        with lock:
            engine.remove_user(user, by=by)
        return {"removed": user}

    # -- policies -----------------------------------------------------------

    @app.post("/policies")
    def post_policies(body: dict = Body(...), dry_run: int = Query(0)):
        if dry_run:
            text = body.get("text", "")
            clauses, diagnostics = parse_policy_set(text)
            return {
                "clauses": [
                    {"owner": c.owner, "action": c.action,
                     "targets": list(c.targets), "devices": list(c.devices)}
                    for c in clauses
                ],
                "diagnostics": [
                    {"line": d.line, "column": d.column, "message": d.message,
                     "severity": d.severity.value}
                    for d in diagnostics
                ],
            }
        with lock:
            if "text" in body:
                result = engine.submit_policy_text(body["text"])
            elif "device_policy" in body:
                result = engine.submit_device_policy(
                    DevicePolicy.from_doc(body["device_policy"]))
            elif "device_policies" in body:
                results = [engine.submit_device_policy(DevicePolicy.from_doc(doc))
                           for doc in body["device_policies"]]
                return {"submissions": [r.to_doc() for r in results]}
            else:
                return _error(400, "body needs 'text', 'device_policy', or 'device_policies'")
            return result.to_doc()

    @app.get("/policies")
    def get_policies():
        return {
            "clauses": [
                {**c.to_doc(), "status": engine.state.clause_status[c.id]}
                for _, c in sorted(engine.state.clauses.items())
            ],
            "enforced": list(engine.state.enforced),
            "rules": engine.rule_table.to_doc(),
        }

    @app.get("/conflicts")
    def get_conflicts():
        return {"conflicts": list(engine.state.reports)}

    # -- negotiations ----------------------------------------------------------

    @app.get("/negotiations")
    def get_negotiations(state: str | None = Query(None)):
        sessions = [s.to_doc() for _, s in sorted(engine.state.sessions.items())]
        if state:
            sessions = [s for s in sessions if s["state"] == state]
        return {"sessions": sessions}

    @app.post("/negotiations/{session_id}/respond")
    def post_respond(session_id: int, body: dict = Body(...)):
        with lock:
            try:
                session = engine.respond(session_id, body["party"], body["verdict"])
            except (SessionClosed, AlreadyResponded) as err:
                return _error(409, str(err))
            except NotAParty as err:
                return _error(403, str(err))
            except NegotiationError as err:
                return _error(400, str(err))
            return {"session": session.to_doc()}

    # -- commands ------------------------------------------------------------

    @app.post("/commands")
    def post_commands(body: dict = Body(...)):
        with lock:
            decision = engine.command(DeviceCommand.from_doc(body))
        doc = decision.to_doc()
        if not decision.allowed:
            return JSONResponse(doc, status_code=403)
        return doc

    # -- presence / notifications ------------------------------------------------

    @app.put("/presence/{user}")
    def put_presence(user: str, body: dict = Body(...)):
        with lock:
            engine.set_presence(user, body["state"])
        return {"user": user, "state": body["state"]}

    @app.get("/presence")
    def get_presence():
        return {"presence": dict(sorted(engine.state.presence.items()))}

    @app.get("/notifications")
    def get_notifications(since: int = Query(0)):
        notes = engine.notifications(since=since)
        return {"notifications": notes,
                "cursor": notes[-1]["seq"] if notes else since}

    # -- devices --------------------------------------------------------------

    @app.get("/devices")
    def get_devices():
        return {"devices": [d.to_doc() for _, d in sorted(engine.state.devices.items())]}

    @app.post("/devices", status_code=201)
    def post_devices(body: dict = Body(...)):
        with lock:
            decision = engine.add_device(DeviceDescriptor.from_doc(body["device"]),
                                         by=body["by"])
        doc = decision.to_doc()
        if not decision.allowed:
            return JSONResponse(doc, status_code=403)
        return doc

    @app.delete("/devices/{device_id}")
    def delete_device(device_id: str, by: str = Query(...)):
        with lock:
            decision = engine.remove_device(device_id, by=by)
        doc = decision.to_doc()
        if not decision.allowed:
            return JSONResponse(doc, status_code=403)
        return doc

    # -- misc ------------------------------------------------------------------

    @app.get("/clock")
    def get_clock():
        return {"clock": engine.clock}

    @app.post("/clock/advance")
    def post_clock(body: dict = Body(...)):
        with lock:
            engine.advance_clock(to=body.get("to"), by=body.get("by"))
        return {"clock": engine.clock}

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

        @app.get("/", include_in_schema=False)
        def index():
            return FileResponse(str(Path(frontend_dir) / "index.html"))

    return app


def serve(addr: str, store_dir: str | None, frontend_dir: str | Path | None = None) -> None:
    """Run the service on host:port with an on-disk store."""
    import uvicorn

    from .store import Store

    host, _, port = addr.rpartition(":")
    engine = Engine(store=Store(store_dir) if store_dir else None)
    app = create_app(engine, frontend_dir=frontend_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
