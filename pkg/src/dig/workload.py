"""Simulate users driving an interface and record the query workload.

A user model picks the next interaction (uniformly or by a markov chain
over interaction ids), samples a payload from the widget's domain, applies
it through the binding engine, and emits one event per interaction: elapsed
time (exponential think time), the binding delta, and the reduced query of
every starting rule whose reduction changed.  Samples that fail domain
validation or trip a constraint are rejected and resampled, so every event
in a trace is valid; a fixed seed reproduces the trace byte for byte.

Trace file format: one event per line, JSON with exactly the fields
t_offset_ms (int), interaction (str), delta (object: variable -> typed
value), queries (array of {rule, query}).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Any, Optional

from .apply import apply_payload
from .binding import PARSED, BindingState, coerce_to_type, resolve_runtime_variable
from .choices import (
    KIND_SELECTION,
    KIND_STAR,
    ChoiceModel,
    PredicateDom,
    QualifiedName,
)
from .errors import DomainError, DomainSamplingFailure, InvalidStateError
from .interface import InterfaceSpec, _variable_value_set
from .reduction import reduce_grammar
from .values import value_to_json

MAX_RESAMPLES = 64


@dataclass
class UserModel:
    kind: str = "uniform-random"  # or "markov"
    transitions: dict[str, dict[str, float]] = field(default_factory=dict)
    think_time_mean_ms: float = 1000.0

    def __post_init__(self):
        if self.kind not in ("uniform-random", "markov"):
            raise ValueError(f"unknown user model kind {self.kind!r}")
        for source, row in self.transitions.items():
            if any(w < 0 for w in row.values()):
                raise ValueError(f"negative transition weight out of '{source}'")

    @classmethod
    def from_json(cls, data: dict) -> "UserModel":
        return cls(
            kind=data.get("kind", "uniform-random"),
            transitions={
                k: dict(v) for k, v in (data.get("transitions") or {}).items()
            },
            think_time_mean_ms=float(data.get("think_time_mean_ms", 1000.0)),
        )


@dataclass
class WorkloadEvent:
    t_offset_ms: int
    interaction: str
    delta: dict[str, Any]  # variable -> typed value json
    queries: list[dict[str, str]]  # [{rule, query}]

    def to_json(self) -> dict:
        return {
            "t_offset_ms": self.t_offset_ms,
            "interaction": self.interaction,
            "delta": self.delta,
            "queries": self.queries,
        }


@dataclass
class WorkloadTrace:
    events: list[WorkloadEvent]

    def to_jsonl(self) -> str:
        return "\n".join(
            json.dumps(e.to_json(), sort_keys=True, separators=(",", ":"))
            for e in self.events
        ) + ("\n" if self.events else "")

    @classmethod
    def from_jsonl(cls, text: str) -> "WorkloadTrace":
        events = []
        for line in text.splitlines():
            if not line.strip():
                continue
            data = json.loads(line)
            events.append(
                WorkloadEvent(
                    t_offset_ms=data["t_offset_ms"],
                    interaction=data["interaction"],
                    delta=data["delta"],
                    queries=data["queries"],
                )
            )
        return cls(events)

    def all_queries(self) -> list[tuple[str, str]]:
        return [(q["rule"], q["query"]) for e in self.events for q in e.queries]


class _Sampler:
    def __init__(self, model: ChoiceModel, backend, rng: random.Random):
        self.model = model
        self.backend = backend
        self.rng = rng
        self._value_cache: dict[QualifiedName, Optional[list]] = {}

    def values_for(self, qname: QualifiedName) -> Optional[list]:
        if qname not in self._value_cache:
            cv = self.model.by_qname[qname]
            self._value_cache[qname] = _variable_value_set(cv, self.backend)
        return self._value_cache[qname]

    def sample_payload(self, spec: InterfaceSpec, interaction) -> Optional[dict]:
        mappings = spec.mappings_for(interaction.id)
        if not mappings:
            return None
        widget = interaction.widget_type
        if widget in ("dropdown", "radio"):
            first = self.model.by_qname.get(QualifiedName.parse(mappings[0].variable))
            if first is not None and first.kind == KIND_SELECTION:
                return {"index": self.rng.randint(first.domain.lo, first.domain.hi)}
            values = self.values_for(QualifiedName.parse(mappings[0].variable))
            if not values:
                return None
            choice = self.rng.choice(values)
            if isinstance(choice, tuple):
                from .interface import query_domain_columns

                columns = query_domain_columns(first.domain.query)
                return {c: _plain(v) for c, v in zip(columns, choice)}
            return {"value": _plain(choice)}
        if widget == "slider":
            dom = interaction.domain.get("value")
            return {"value": self.rng.randint(int(dom.lo), int(dom.hi))}
        if widget == "range-slider":
            dom = interaction.domain.get("lo")
            a = self.rng.randint(int(dom.lo), int(dom.hi))
            b = self.rng.randint(int(dom.lo), int(dom.hi))
            return {"lo": min(a, b), "hi": max(a, b)}
        if widget == "date-picker":
            values = self.values_for(QualifiedName.parse(mappings[0].variable))
            if not values:
                return None
            return {"value": _plain(self.rng.choice(values))}
        if widget == "button-add-instance":
            if "count" in interaction.domain:
                return {"count": self.rng.randint(0, interaction.domain["count"].cap)}
            dom = interaction.domain.get("index")
            return {"index": self.rng.randint(dom.lo, dom.hi)}
        if widget == "checkbox":
            return {"checked": bool(self.rng.getrandbits(1))}
        if widget == "text-input":
            # sample the mapped variables directly: equivalent to typing a
            # string that parses to exactly these values
            payload: dict[str, Any] = {}
            for mapping in mappings:
                qname = QualifiedName.parse(mapping.variable)
                cv = self.model.by_qname.get(qname)
                if cv is None:
                    continue
                if cv.kind == KIND_SELECTION:
                    payload[str(qname)] = self.rng.randint(cv.domain.lo, cv.domain.hi)
                elif cv.kind == KIND_STAR:
                    cap = cv.domain.cap or 4
                    payload[str(qname)] = self.rng.randint(0, min(cap, 4))
                else:
                    values = self.values_for(qname)
                    if not values:
                        return None
                    payload[str(qname)] = _plain(self.rng.choice(values))
            return {"__direct__": payload}
        return None


def _plain(value):
    import datetime

    if isinstance(value, datetime.date):
        return value.isoformat()
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def generate_workload(model: ChoiceModel, spec: InterfaceSpec, user_model: UserModel,
                      n: int, seed: int = 0, backend=None) -> WorkloadTrace:
    """Simulate n interactions; deterministic for a fixed seed."""
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = random.Random(seed)
    state = BindingState(model, backend)
    sampler = _Sampler(model, backend, rng)
    interactions = list(spec.interactions)
    if not interactions and n > 0:
        raise InvalidStateError("the interface declares no interactions")
    events: list[WorkloadEvent] = []
    previous: Optional[str] = None
    clock_ms = 0.0
    last_queries: dict[str, str] = {}

    for _ in range(n):
        interaction = _pick(rng, user_model, interactions, previous)
        bound = None
        for _attempt in range(MAX_RESAMPLES):
            payload = sampler.sample_payload(spec, interaction)
            if payload is None:
                interaction = _pick(rng, user_model, interactions, previous)
                continue
            snapshot = dict(state.bindings)
            try:
                if "__direct__" in payload:
                    bound = {}
                    for name, raw in payload["__direct__"].items():
                        qname = QualifiedName.parse(name)
                        cv = resolve_runtime_variable(model, qname)
                        value = raw
                        if isinstance(cv.domain, PredicateDom):
                            value = coerce_to_type(raw, cv.domain.base_type.name)
                        state.bind(qname, value, provenance=PARSED)
                        bound[name] = value
                else:
                    _, bound = apply_payload(state, spec, interaction.id, payload)
            except DomainError:
                state.bindings = snapshot
                state._recheck_violations()
                bound = None
                continue
            if state.violations:
                state.bindings = snapshot
                state._recheck_violations()
                bound = None
                continue
            break
        if bound is None:
            raise DomainSamplingFailure(interaction.id, MAX_RESAMPLES)

        reductions = reduce_grammar(model, state)
        changed_queries: list[dict[str, str]] = []
        for rule, entry in reductions.per_rule.items():
            if entry.complete and last_queries.get(rule) != entry.query:
                changed_queries.append({"rule": rule, "query": entry.query})
                last_queries[rule] = entry.query
        clock_ms += rng.expovariate(1.0 / user_model.think_time_mean_ms)
        events.append(
            WorkloadEvent(
                t_offset_ms=int(clock_ms),
                interaction=interaction.id,
                delta={name: value_to_json(v) for name, v in sorted(bound.items())},
                queries=sorted(changed_queries, key=lambda q: q["rule"]),
            )
        )
        previous = interaction.id
    return WorkloadTrace(events)


def _pick(rng: random.Random, user_model: UserModel, interactions, previous):
    if user_model.kind == "markov" and previous is not None:
        row = user_model.transitions.get(previous)
        if row:
            ids = [i for i in interactions if row.get(i.id, 0) > 0]
            weights = [row[i.id] for i in ids]
            if ids:
                return rng.choices(ids, weights=weights, k=1)[0]
    return rng.choice(interactions)


def load_user_model(path_or_json: str) -> UserModel:
    """Load a user model from a JSON file path or inline JSON text."""
    text = path_or_json
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        with open(path_or_json, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    return UserModel.from_json(data)
