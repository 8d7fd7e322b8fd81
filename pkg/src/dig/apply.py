"""Translate widget payloads into binds / text parses.

This is the single place where interaction payloads (the JSON bodies the UI
posts) become engine operations, shared by the HTTP server, the tutorial
replayer, and the workload generator.  Payload shapes by widget type:

    dropdown/radio        {"index": 2}            selection-backed
    dropdown (values)     {"value": "widget"}     domain-backed, or one key
                                                  per column for row domains
    slider                {"value": 17}
    range-slider          {"lo": 1, "hi": 2}
    text-input            {"text": "..."}         parsed when the interaction
                                                  has a target rule
    date-picker           {"value": "2023-01-15"}
    button-add-instance   {"count": 3}
    checkbox              {"checked": true}

An optional "path" field retargets the bind at a repetition-instance or
recursion path whose template is the mapped variable.
"""

from __future__ import annotations

from typing import Any, Optional

from .binding import BindEffects, BindingState, coerce_to_type, resolve_runtime_variable
from .choices import KIND_PREDICATE, KIND_SELECTION, KIND_STAR, PredicateDom, QualifiedName
from .errors import InvalidStateError
from .interface import InterfaceSpec, MappingDecl, query_domain_columns, variable_attrs
from .textparse import parse_input
from .values import Value


def _coerce_for_variable(state: BindingState, qname: QualifiedName, raw: Any) -> Value:
    var = resolve_runtime_variable(state.model, qname)
    if var.kind in (KIND_SELECTION, KIND_STAR):
        return int(raw)
    if var.kind == KIND_PREDICATE:
        assert isinstance(var.domain, PredicateDom)
        return coerce_to_type(raw, var.domain.base_type.name)
    return raw if not isinstance(raw, list) else tuple(raw)


def _merge(total: BindEffects, got: BindEffects):
    total.propagated.extend(got.propagated)
    total.removed.extend(got.removed)
    total.new_violations.extend(got.new_violations)
    total.cleared_violations.extend(got.cleared_violations)


def apply_payload(state: BindingState, spec: InterfaceSpec, interaction_id: str,
                  payload: dict[str, Any]) -> tuple[BindEffects, dict[str, Value]]:
    """Apply one widget payload; returns merged effects and what was bound."""
    interaction = spec.interaction(interaction_id)
    mappings = spec.mappings_for(interaction_id)
    if not mappings:
        raise InvalidStateError(f"interaction '{interaction_id}' maps no variables")
    at: Optional[QualifiedName] = None
    if payload.get("path"):
        at = QualifiedName.parse(str(payload["path"]))

    if interaction.widget_type == "text-input" and interaction.target_rule:
        text = str(payload.get("text", ""))
        return parse_input(state, interaction.target_rule, text, at=at)

    effects = BindEffects()
    bound: dict[str, Value] = {}
    for mapping in mappings:
        template = QualifiedName.parse(mapping.variable)
        qname = at if at is not None and _is_instance_of(state, at, template) else template
        value = _payload_value(state, interaction, mapping, qname, payload)
        if value is None:
            continue
        got = state.bind(qname, value)
        bound[str(qname)] = value
        _merge(effects, got)
    if not bound:
        raise InvalidStateError(
            f"payload for '{interaction_id}' carries no value for its attributes"
        )
    return effects, bound


def _is_instance_of(state: BindingState, at: QualifiedName, template: QualifiedName) -> bool:
    try:
        var = resolve_runtime_variable(state.model, at)
    except Exception:
        return False
    return var.qname == template or str(var.qname) == str(template)


def _payload_value(state: BindingState, interaction, mapping: MappingDecl,
                   qname: QualifiedName, payload: dict[str, Any]) -> Optional[Value]:
    var = resolve_runtime_variable(state.model, qname)
    attrs = mapping.attrs
    cv_attrs = variable_attrs(var)
    if len(cv_attrs) > 1:  # row-valued query domain: one payload key per column
        columns = query_domain_columns(var.domain.query)
        row = []
        for col in columns:
            i_attr = _attr_for(attrs, col)
            if i_attr is None or i_attr not in payload:
                return None
            row.append(payload[i_attr])
        return tuple(row)
    target_attr = cv_attrs[0]
    i_attr = _attr_for(attrs, target_attr)
    if i_attr is None:
        return None
    if i_attr in payload:
        raw = payload[i_attr]
    elif interaction.widget_type == "checkbox" and "checked" in payload:
        raw = 2 if payload["checked"] else 1
    elif "value" in payload and target_attr in ("value", "index", "count"):
        raw = payload["value"]
    elif "index" in payload and target_attr == "index":
        raw = payload["index"]
    else:
        return None
    return _coerce_for_variable(state, qname, raw)


def _attr_for(attrs: dict[str, str], cv_attr: str) -> Optional[str]:
    for i_attr, c_attr in attrs.items():
        if c_attr == cv_attr:
            return i_attr
    return None


def unbind_payload(state: BindingState, spec: InterfaceSpec, interaction_id: str
                   ) -> BindEffects:
    """Clear every variable an interaction maps (widget reset)."""
    effects = BindEffects()
    for mapping in spec.mappings_for(interaction_id):
        got = state.unbind(mapping.variable)
        _merge(effects, got)
    return effects
