"""Session-scoped HTTP service over the engine.

Endpoints (JSON bodies unless noted):

    POST /grammars                     {"source": "...", "name": "..."}
    GET  /grammars/{gid}/choice-variables
    POST /sessions                     {"grammar_id", "synth": "auto"|"default",
                                        "options": {...}}
    POST /sessions/{sid}/interactions/{iid}    widget payload (see apply.py)
    POST /sessions/{sid}/input         {"target": rule, "text": "...",
                                        "path": optional}
    GET  /sessions/{sid}/state
    GET  /sessions/{sid}/results/{view_id}?offset=N

Grammars are immutable once loaded and shared across sessions; each session
owns one binding state and a lock, so concurrent requests to one session
apply in a total order.  Query results are truncated at a configurable row
cap with an offset-based continuation token.  Everything the UI renders is
reconstructible from GET /state.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .apply import apply_payload, unbind_payload
from .backend import SqliteBackend
from .binding import BindingState
from .choices import ChoiceModel, QualifiedName
from .tutorial import plan_tutorial
from .errors import (
    BackendError,
    DigError,
    DomainError,
    IncompleteError,
    TextParseError,
    UnknownGrammarError,
    UnknownSessionError,
)
from .interface import InterfaceSpec, synthesize, synthesize_default
from .parser import parse_grammar
from .reduction import reachable_variables, reduce_grammar
from .textparse import parse_input
from .validate import validate_grammar
from .values import value_from_json, value_to_json

DEFAULT_ROW_CAP = 500


@dataclass
class GrammarEntry:
    id: str
    name: str
    source: str
    model: ChoiceModel


@dataclass
class Session:
    id: str
    grammar: GrammarEntry
    spec: InterfaceSpec
    state: BindingState
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_results: dict[str, dict] = field(default_factory=dict)


class LoadGrammarBody(BaseModel):
    source: str
    name: Optional[str] = None


class CreateSessionBody(BaseModel):
    grammar_id: str
    synth: str = "auto"  # "auto" or "default"
    options: dict[str, Any] = {}


class InputBody(BaseModel):
    target: str
    text: str
    path: Optional[str] = None


class TutorialBody(BaseModel):
    """Target state: either explicit bindings or a query per starting rule."""

    bindings: dict[str, Any] = {}
    queries: dict[str, str] = {}


def _http_error(exc: DigError) -> HTTPException:
    if isinstance(exc, (UnknownGrammarError, UnknownSessionError)):
        return HTTPException(status_code=404, detail=str(exc))
    if isinstance(exc, (DomainError, TextParseError, IncompleteError)):
        return HTTPException(status_code=422, detail=str(exc))
    if isinstance(exc, BackendError):
        return HTTPException(status_code=502, detail=str(exc))
    return HTTPException(status_code=400, detail=str(exc))


class DigServer:
    """Application state: grammar store, sessions, shared backend."""

    def __init__(self, backend: Optional[SqliteBackend] = None,
                 row_cap: int = DEFAULT_ROW_CAP):
        self.backend = backend
        self.row_cap = row_cap
        self.grammars: dict[str, GrammarEntry] = {}
        self.sessions: dict[str, Session] = {}
        self._store_lock = threading.Lock()

    # -- grammars -----------------------------------------------------------

    def load_grammar(self, source: str, name: Optional[str] = None) -> GrammarEntry:
        ast = parse_grammar(source)
        report = validate_grammar(ast)
        if not report.ok():
            raise DomainError("grammar", name or "<input>", str(report))
        model = ChoiceModel(ast, recursion="summary")
        with self._store_lock:
            gid = f"g{len(self.grammars) + 1}"
            entry = GrammarEntry(id=gid, name=name or gid, source=source, model=model)
            self.grammars[gid] = entry
        return entry

    def grammar(self, gid: str) -> GrammarEntry:
        entry = self.grammars.get(gid)
        if entry is None:
            raise UnknownGrammarError(gid)
        return entry

    # -- sessions -----------------------------------------------------------

    def create_session(self, grammar_id: str, synth: str = "auto",
                       options: Optional[dict] = None) -> Session:
        entry = self.grammar(grammar_id)
        options = options or {}
        if synth == "default" or options.get("default_text"):
            spec = synthesize_default(entry.model.ast)
        else:
            spec = synthesize(entry.model, self.backend)
        state = BindingState(entry.model, self.backend)
        session = Session(
            id=uuid.uuid4().hex[:12], grammar=entry, spec=spec, state=state
        )
        with self._store_lock:
            self.sessions[session.id] = session
        return session

    def session(self, sid: str) -> Session:
        session = self.sessions.get(sid)
        if session is None:
            raise UnknownSessionError(sid)
        return session

    # -- results ------------------------------------------------------------

    def _execute_views(self, session: Session, rules: set[str]) -> dict[str, dict]:
        """Reduce + run the views over the named rules; returns per-view results."""
        out: dict[str, dict] = {}
        if not rules:
            return out
        reductions = reduce_grammar(session.grammar.model, session.state, sorted(rules))
        for view in session.spec.views:
            rule = view.starting_rule
            if rule not in rules:
                continue
            entry = reductions.per_rule[rule]
            if not entry.complete:
                out[view.id] = {
                    "view": view.id,
                    "rule": rule,
                    "status": "incomplete",
                    "unbound": [str(q) for q in entry.unbound],
                    "violations": [v.to_json() for v in entry.violations],
                }
                continue
            payload = {"view": view.id, "rule": rule, "query": entry.query}
            if self.backend is None:
                payload.update(status="no-backend", rows=[], columns=[])
            else:
                try:
                    result = self.backend.execute(entry.query)
                except BackendError as exc:
                    payload.update(status="error", error=str(exc))
                else:
                    rows = result.rows[: self.row_cap]
                    payload.update(
                        status="ok",
                        columns=[{"name": n, "type": t} for n, t in result.columns],
                        rows=[list(r) for r in rows],
                        row_count=result.row_count,
                        truncated=result.row_count > self.row_cap,
                    )
                    if result.row_count > self.row_cap:
                        payload["next_offset"] = self.row_cap
            out[view.id] = payload
        return out

    def affected_rules(self, session: Session, touched: set[QualifiedName]) -> set[str]:
        model = session.grammar.model
        rules = set()
        for rule in model.ast.starting_rules:
            reach = reachable_variables(model, session.state, rule)
            if reach & touched or not touched:
                rules.add(rule)
        return rules

    def state_payload(self, session: Session) -> dict:
        state = session.state
        return {
            "session_id": session.id,
            "grammar_id": session.grammar.id,
            "spec": session.spec.to_json(),
            "bindings": state.to_json()["bindings"],
            "violations": [v.to_json() for v in state.violations],
            "results": session.last_results,
        }


def create_app(server: Optional[DigServer] = None,
               static_dir: Optional[str] = None) -> FastAPI:
    server = server or DigServer()
    app = FastAPI(title="data interface grammar service")
    app.state.dig = server

    @app.post("/grammars")
    def load_grammar(body: LoadGrammarBody):
        try:
            entry = server.load_grammar(body.source, body.name)
        except DigError as exc:
            raise _http_error(exc) from None
        model = entry.model
        return {
            "grammar_id": entry.id,
            "name": entry.name,
            "starting_rules": list(model.ast.starting_rules),
            "choice_variables": [str(v.qname) for v in model.variables],
        }

    @app.get("/grammars")
    def list_grammars():
        return {
            "grammars": [
                {
                    "grammar_id": entry.id,
                    "name": entry.name,
                    "starting_rules": list(entry.model.ast.starting_rules),
                }
                for entry in server.grammars.values()
            ]
        }

    @app.get("/grammars/{gid}/choice-variables")
    def choice_variables(gid: str):
        try:
            entry = server.grammar(gid)
        except DigError as exc:
            raise _http_error(exc) from None
        model = entry.model
        out = []
        for cv in model.variables:
            touching = [
                _constraint_text(rc)
                for rc in model.constraints
                if cv.qname in rc.involved()
            ]
            out.append({
                "name": str(cv.qname),
                "kind": cv.kind,
                "domain": str(cv.domain),
                "rule": cv.rule,
                "constraints": touching,
                "equality_class": sorted(str(q) for q in model.class_of(cv.qname))
                if len(model.class_of(cv.qname)) > 1 else [],
            })
        return {"grammar_id": gid, "choice_variables": out}

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        try:
            session = server.create_session(body.grammar_id, body.synth, body.options)
        except DigError as exc:
            raise _http_error(exc) from None
        with session.lock:
            session.last_results = server._execute_views(
                session, set(session.grammar.model.ast.starting_rules)
            )
            return {
                "session_id": session.id,
                "spec": session.spec.to_json(),
                "results": session.last_results,
            }

    @app.post("/sessions/{sid}/interactions/{iid}")
    def apply_interaction(sid: str, iid: str, payload: dict):
        try:
            session = server.session(sid)
        except DigError as exc:
            raise _http_error(exc) from None
        with session.lock:
            state = session.state
            try:
                if payload.get("clear"):
                    effects = unbind_payload(state, session.spec, iid)
                    bound = {}
                else:
                    effects, bound = apply_payload(state, session.spec, iid, payload)
            except DigError as exc:
                raise _http_error(exc) from None
            touched = {state.resolve(name) for name in bound}
            touched |= set(effects.propagated) | set(effects.removed)
            rules = server.affected_rules(session, touched)
            results = server._execute_views(session, rules)
            session.last_results.update(results)
            return {
                "bound": {name: value_to_json(v) for name, v in bound.items()},
                "propagated": [str(q) for q in effects.propagated],
                "removed": [str(q) for q in effects.removed],
                "violations": [v.to_json() for v in state.violations],
                "results": results,
            }

    @app.post("/sessions/{sid}/input")
    def text_input(sid: str, body: InputBody):
        try:
            session = server.session(sid)
        except DigError as exc:
            raise _http_error(exc) from None
        with session.lock:
            state = session.state
            at = QualifiedName.parse(body.path) if body.path else None
            try:
                effects, bound = parse_input(state, body.target, body.text, at=at)
            except DigError as exc:
                raise _http_error(exc) from None
            touched = {state.resolve(name) for name in bound}
            touched |= set(effects.propagated)
            rules = server.affected_rules(session, touched)
            results = server._execute_views(session, rules)
            session.last_results.update(results)
            return {
                "bound": {name: value_to_json(v) for name, v in bound.items()},
                "propagated": [str(q) for q in effects.propagated],
                "violations": [v.to_json() for v in state.violations],
                "results": results,
            }

    @app.post("/sessions/{sid}/tutorial")
    def tutorial(sid: str, body: TutorialBody):
        try:
            session = server.session(sid)
        except DigError as exc:
            raise _http_error(exc) from None
        with session.lock:
            model = session.grammar.model
            end = BindingState(model, server.backend)
            try:
                for rule, text in body.queries.items():
                    parse_input(end, rule, text)
                for name, entry in body.bindings.items():
                    value = value_from_json(entry) if isinstance(entry, dict) else entry
                    end.bind(name, value)
                steps = plan_tutorial(model, session.spec, session.state, end,
                                      server.backend)
            except DigError as exc:
                raise _http_error(exc) from None
            return {"steps": [s.to_json() for s in steps]}

    @app.get("/sessions/{sid}/state")
    def get_state(sid: str):
        try:
            session = server.session(sid)
        except DigError as exc:
            raise _http_error(exc) from None
        with session.lock:
            return server.state_payload(session)

    @app.get("/sessions/{sid}/results/{view_id}")
    def view_rows(sid: str, view_id: str, offset: int = 0):
        try:
            session = server.session(sid)
        except DigError as exc:
            raise _http_error(exc) from None
        with session.lock:
            last = session.last_results.get(view_id)
            if last is None or "query" not in last:
                raise HTTPException(status_code=404, detail="view has no results")
            if server.backend is None:
                raise HTTPException(status_code=502, detail="no backend connected")
            try:
                result = server.backend.execute(last["query"])
            except BackendError as exc:
                raise HTTPException(status_code=502, detail=str(exc)) from None
            rows = result.rows[offset : offset + server.row_cap]
            payload = {
                "view": view_id,
                "rows": [list(r) for r in rows],
                "offset": offset,
                "row_count": result.row_count,
                "truncated": offset + server.row_cap < result.row_count,
            }
            if payload["truncated"]:
                payload["next_offset"] = offset + server.row_cap
            return payload

    if static_dir and Path(static_dir).is_dir():
        index = Path(static_dir) / "index.html"

        @app.get("/")
        def root():
            return FileResponse(index)

        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def _constraint_text(rc) -> str:
    from .formatter import format_bool_expr

    return format_bool_expr(rc.constraint.expr)
