"""Plan the interaction sequence that moves an interface between states.

Given violation-free start and end binding states and a valid interface
spec, the planner diffs the states, groups the changed variables by the
interaction that covers them (one step re-binds everything its widget
maps), and orders the steps so a variable's gating selection is always set
before the variables inside the chosen alternative.  Cost is one unit per
interaction - a pluggable hook can replace it - so the plan is minimal in
step count among dependency-respecting orders, with ties broken by
interaction declaration order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional

from .apply import apply_payload
from .binding import PROPAGATED, BindingState
from .choices import ChoiceModel, QualifiedName
from .errors import InvalidStateError, UnreachableStateError
from .interface import InterfaceSpec, covers
from .reduction import reachable_variables, reduce_grammar
from .values import Value, render_value, value_to_json


@dataclass
class TutorialStep:
    interaction_id: str
    values: dict[str, Value]  # mapped variable -> target value
    payload: dict[str, Any]  # widget payload that realizes the values
    instruction: str

    def to_json(self):
        return {
            "interaction": self.interaction_id,
            "values": {k: value_to_json(v) for k, v in self.values.items()},
            "payload": dict(self.payload),
            "instruction": self.instruction,
        }


def observable_bindings(state: BindingState) -> dict[QualifiedName, Value]:
    """Bindings reachable under the state's current selections, per root."""
    out: dict[QualifiedName, Value] = {}
    for rule in state.model.ast.starting_rules:
        for qname in reachable_variables(state.model, state, rule):
            if state.is_bound(qname):
                out[qname] = state.value(qname)
    return out


def states_equal(a: BindingState, b: BindingState) -> bool:
    """Equality on the observable (reachable) projection of two states."""
    ra = {q: render_value(v) for q, v in observable_bindings(a).items()}
    rb = {q: render_value(v) for q, v in observable_bindings(b).items()}
    return ra == rb


def _covering_interaction(model: ChoiceModel, spec: InterfaceSpec,
                          qname: QualifiedName, backend) -> Optional[str]:
    cv = model.by_qname.get(qname)
    if cv is None:
        return None
    for interaction in spec.interactions:  # declaration order breaks ties
        for mapping in spec.mappings_for(interaction.id):
            if mapping.variable == str(qname) and covers(interaction, mapping, cv, backend):
                return interaction.id
    return None


def _payload_for(spec: InterfaceSpec, model: ChoiceModel, interaction_id: str,
                 values: dict[QualifiedName, Value], end: BindingState) -> dict[str, Any]:
    interaction = spec.interaction(interaction_id)
    if interaction.widget_type == "text-input" and interaction.target_rule:
        reduced = reduce_grammar(model, end, [interaction.target_rule])
        entry = reduced.per_rule[interaction.target_rule]
        if entry.complete:
            return {"text": entry.query}
        return {"text": ""}
    payload: dict[str, Any] = {}
    for mapping in spec.mappings_for(interaction_id):
        qname = QualifiedName.parse(mapping.variable)
        if qname not in values:
            continue
        value = values[qname]
        for i_attr, c_attr in mapping.attrs.items():
            if c_attr in ("index", "count", "value") or len(mapping.attrs) > 1:
                payload[i_attr] = _jsonable(value)
    return payload


def _jsonable(value: Value):
    import datetime

    if isinstance(value, datetime.date):
        return value.isoformat()
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    return value


def _instruction(spec: InterfaceSpec, interaction_id: str,
                 values: dict[QualifiedName, Value]) -> str:
    interaction = spec.interaction(interaction_id)
    label = interaction.label or interaction.id
    ordered = []
    for mapping in spec.mappings_for(interaction_id):
        qname = QualifiedName.parse(mapping.variable)
        if qname in values:
            ordered.append((qname, values[qname]))
    for qname, value in sorted(values.items()):
        if not any(q == qname for q, _ in ordered):
            ordered.append((qname, value))
    rendered: list[str] = []
    for qname, value in ordered:
        if interaction.widget_type in ("dropdown", "radio") and interaction.options:
            if isinstance(value, int) and 1 <= value <= len(interaction.options):
                rendered.append(interaction.options[value - 1])
                continue
        rendered.append(render_value(value))
    shown = ", ".join(rendered)
    verbs = {
        "dropdown": f"set the '{label}' dropdown to {shown}",
        "radio": f"choose {shown} with the '{label}' radio buttons",
        "slider": f"move the '{label}' slider to {shown}",
        "range-slider": f"drag the '{label}' range to ({shown})",
        "date-picker": f"pick {shown} in '{label}'",
        "text-input": f"type into '{label}'",
        "button-add-instance": f"use '{label}' to set {shown} instances",
        "checkbox": f"toggle '{label}' to {shown}",
    }
    return verbs.get(interaction.widget_type, f"set '{label}' to {shown}")


def plan_tutorial(model: ChoiceModel, spec: InterfaceSpec, start: BindingState,
                  end: BindingState, backend=None,
                  cost: Optional[Callable[[str], float]] = None) -> list[TutorialStep]:
    """Steps that transform `start` into `end` (observable projection).

    Raises InvalidState when either state carries violations and
    Unreachable when a changed variable is covered by no interaction.
    """
    if start.violations:
        raise InvalidStateError("start state has violations")
    if end.violations:
        raise InvalidStateError("end state has violations")

    target = observable_bindings(end)
    # change set: end bindings that differ from start
    changed: dict[QualifiedName, Value] = {}
    for qname, value in target.items():
        current = start.value(qname) if start.is_bound(qname) else None
        if current is None or render_value(current) != render_value(value):
            changed[qname] = value
    # propagation fixes equality mates: keep one coverable member per class
    survivors: dict[QualifiedName, Value] = {}
    handled: set[QualifiedName] = set()
    by_interaction: dict[str, dict[QualifiedName, Value]] = {}
    for qname in sorted(changed):
        if qname in handled:
            continue
        cls = model.class_of(qname)
        handled |= cls
        interaction_id = None
        chosen = qname
        for member in sorted(cls):
            interaction_id = _covering_interaction(model, spec, member, backend)
            if interaction_id is not None:
                chosen = member
                break
        if interaction_id is None:
            raise UnreachableStateError(str(qname))
        survivors[chosen] = changed[qname]
        by_interaction.setdefault(interaction_id, {})[chosen] = changed[qname]

    # dependency order: a step binding a gating ancestor runs first
    ids = [i.id for i in spec.interactions if i.id in by_interaction]

    def gated_by(a: str, b: str) -> bool:
        """Does step a bind an ancestor of something step b binds?"""
        for qa in by_interaction[a]:
            for qb in by_interaction[b]:
                if model.order.precedes(qa, qb):
                    return True
        return False

    ordered: list[str] = []
    remaining = list(ids)
    while remaining:
        for candidate in remaining:
            if not any(gated_by(other, candidate) for other in remaining
                       if other != candidate):
                ordered.append(candidate)
                remaining.remove(candidate)
                break
        else:  # cycle cannot happen over a forest; defensive
            ordered.extend(remaining)
            break

    if cost is not None:
        ordered.sort(key=lambda i: cost(i))

    steps: list[TutorialStep] = []
    for interaction_id in ordered:
        values = by_interaction[interaction_id]
        steps.append(
            TutorialStep(
                interaction_id=interaction_id,
                values={str(q): v for q, v in values.items()},
                payload=_payload_for(spec, model, interaction_id, values, end),
                instruction=_instruction(spec, interaction_id, values),
            )
        )
    return steps


def replay(model: ChoiceModel, spec: InterfaceSpec, start: BindingState,
           steps: list[TutorialStep], backend=None) -> BindingState:
    """Execute a plan on a copy of `start` and return the resulting state."""
    state = BindingState(model, backend if backend is not None else start.backend)
    for qname, bound in start.bindings.items():
        if bound.provenance != PROPAGATED:
            state.bind(qname, bound.value, provenance=bound.provenance)
    for step in steps:
        apply_payload(state, spec, step.interaction_id, step.payload)
    return state
