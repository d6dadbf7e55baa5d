"""HTTP/JSON facade over sessions, runs, edits, audits, and branches.

Sessions are in-memory and die with the server; branch files under the
server root are the durable record. One run/edit/reset at a time per
session: a second concurrent mutation gets 409 instead of queueing,
because a human is driving and a stale queued run would only confuse.

Error body shape everywhere: {"error": {"code", "message", "line"?}}.
"""

from __future__ import annotations

import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import dsl
from .audit import Advisory, AuditConfig, audit_session
from .branches import BranchError, BranchRecord, BranchStore, IntegrityError
from .cli import _BRANCH_NAME_RE
from .engine import RunError, Session


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, line: int | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.line = line

    def body(self) -> dict:
        err: dict = {"code": self.code, "message": self.message}
        if self.line is not None:
            err["line"] = self.line
        return {"error": err}


class SessionHandle:
    def __init__(self, sid: str, base: str, session: Session, origin: tuple[str, int] | None):
        self.id = sid
        self.base = base
        self.session = session
        self.origin = origin
        self.lock = threading.Lock()
        self.last_advisories: list[Advisory] = []


class CreateSession(BaseModel):
    script_text: str | None = None
    script_path: str | None = None
    base: str | None = None


class RunRequest(BaseModel):
    from_: int | None = Field(default=None, alias="from")
    through: int | None = None
    audit: bool = False

    model_config = {"populate_by_name": True}


class EditRequest(BaseModel):
    text: str


class BranchRequest(BaseModel):
    description: str


def _advisory_json(a: Advisory) -> dict:
    return {"code": a.code, "message": a.message, "line": a.line_no, "subject": a.subject}


def _record_json(r: BranchRecord) -> dict:
    return {
        "base": r.base,
        "number": r.number,
        "description": r.description,
        "parent": list(r.parent) if r.parent else None,
        "created_at": r.created_at,
        "content_hash": r.content_hash,
        "file": r.path.name,
    }


def _session_lines(session: Session) -> list[str]:
    return [dsl.format_stmt(s) for s in session.script.lines]


def create_app(root: str | Path, web_dir: str | Path | None = None) -> FastAPI:
    root = Path(root).resolve()
    store = BranchStore(root)
    sessions: dict[str, SessionHandle] = {}

    app = FastAPI(title="rvl session service")
    app.state.sessions = sessions
    app.state.root = root

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content=exc.body())

    def get_handle(sid: str) -> SessionHandle:
        handle = sessions.get(sid)
        if handle is None:
            raise ApiError(404, "unknown_session", f"no session {sid!r}")
        return handle

    def locked(handle: SessionHandle):
        if not handle.lock.acquire(blocking=False):
            raise ApiError(409, "busy", "another run/edit/reset on this session is in progress")
        return handle.lock

    @app.post("/sessions")
    def create_session(req: CreateSession):
        if (req.script_text is None) == (req.script_path is None):
            raise ApiError(422, "bad_request", "exactly one of script_text/script_path required")
        origin: tuple[str, int] | None = None
        if req.script_path is not None:
            path = (root / req.script_path).resolve()
            if not str(path).startswith(str(root)):
                raise ApiError(422, "bad_request", "script_path escapes the server root")
            if not path.exists():
                raise ApiError(404, "not_found", f"no script {req.script_path!r}")
            m = _BRANCH_NAME_RE.match(path.name)
            try:
                if m and path.read_text(encoding="utf-8").startswith("#: "):
                    base, number = m.group("base"), int(m.group("num"))
                    script, _ = BranchStore(path.parent).load_branch(base, number)
                    origin = (base, number)
                else:
                    base = path.stem
                    script = dsl.parse_script(path.read_text(encoding="utf-8"), str(path))
                    origin = (base, 0)
            except IntegrityError as exc:
                raise ApiError(422, "integrity_error", str(exc))
            except BranchError as exc:
                raise ApiError(422, "branch_error", str(exc))
            except dsl.ParseError as exc:
                raise ApiError(422, "parse_error", exc.message, line=exc.line)
            session = Session(script, data_root=path.parent)
        else:
            base = req.base or "script"
            try:
                script = dsl.parse_script(req.script_text, "<posted>")
            except dsl.ParseError as exc:
                raise ApiError(422, "parse_error", exc.message, line=exc.line)
            session = Session(script, data_root=root)
        sid = uuid.uuid4().hex[:12]
        sessions[sid] = SessionHandle(sid, base, session, origin)
        return {"id": sid, "base": base, "lines": _session_lines(session)}

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        handle = get_handle(sid)
        s = handle.session
        return {
            "id": handle.id,
            "base": handle.base,
            "lines": _session_lines(s),
            "next_line": s.next_line,
            "outputs": [{"line": n, "text": t} for n, t in s.output_log],
            "advisories": [_advisory_json(a) for a in handle.last_advisories],
        }

    @app.post("/sessions/{sid}/run")
    def run_session(sid: str, req: RunRequest):
        handle = get_handle(sid)
        lock = locked(handle)
        try:
            s = handle.session
            n = len(s.script)
            if req.from_ is not None:
                if not 1 <= req.from_ <= n + 1:
                    raise ApiError(422, "bad_line", f"from line {req.from_} outside [1, {n}]")
                s.reset()
                if req.from_ > 1:
                    s.run_to_line(req.from_ - 1)
            through = req.through if req.through is not None else n
            if through < s.next_line - 1 or through > n:
                raise ApiError(
                    422, "bad_line", f"through line {through} outside [{s.next_line}, {n}]"
                )
            before = len(s.output_log)
            try:
                s.run_to_line(through)
            except RunError as exc:
                raise ApiError(422, "run_error", exc.message, line=exc.line_no)
            outputs = [{"line": n_, "text": t} for n_, t in s.output_log[before:]]
            advisories = audit_session(s, AuditConfig()) if req.audit else []
            handle.last_advisories = advisories
            return {
                "outputs": outputs,
                "advisories": [_advisory_json(a) for a in advisories],
                "next_line": s.next_line,
            }
        finally:
            lock.release()

    @app.put("/sessions/{sid}/lines/{line_no}")
    def edit_line(sid: str, line_no: int, req: EditRequest):
        handle = get_handle(sid)
        lock = locked(handle)
        try:
            s = handle.session
            try:
                s.edit_line(line_no, req.text)
            except dsl.ParseError as exc:
                raise ApiError(422, "parse_error", exc.message, line=line_no)
            except RunError as exc:
                raise ApiError(422, "bad_line", exc.message, line=line_no)
            return {"lines": _session_lines(s), "next_line": s.next_line}
        finally:
            lock.release()

    @app.post("/sessions/{sid}/reset")
    def reset_session(sid: str):
        handle = get_handle(sid)
        lock = locked(handle)
        try:
            handle.session.reset()
            handle.last_advisories = []
            return {"lines": _session_lines(handle.session), "next_line": 1}
        finally:
            lock.release()

    @app.post("/sessions/{sid}/branches")
    def save_branch(sid: str, req: BranchRequest):
        handle = get_handle(sid)
        parent = handle.origin
        if parent is not None:
            pbase, pnum = parent
            ppath = store.root / (f"{pbase}.rvl" if pnum == 0 else f"{pbase}.{pnum}.rvl")
            if not ppath.exists():
                parent = None
        try:
            record = store.save_branch(handle.session.script, handle.base, req.description, parent)
        except BranchError as exc:
            raise ApiError(422, "branch_error", str(exc))
        return _record_json(record)

    @app.get("/branches")
    def list_branches(base: str):
        try:
            records = store.list_branches(base)
        except BranchError as exc:
            raise ApiError(422, "branch_error", str(exc))
        return {"branches": [_record_json(r) for r in records]}

    web = Path(web_dir) if web_dir else _default_web_dir()
    if web is not None and web.is_dir():
        app.mount("/", StaticFiles(directory=web, html=True), name="webui")

    return app


def _default_web_dir() -> Path | None:
    # repo layout: src/rvl/server.py -> <repo>/frontend/dist
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if candidate.is_dir():
        return candidate
    return None
