"""Per-session binding state: validation, equality propagation, violations.

A BindingState maps qualified names to values.  Binding a member of an
equality class copies the value to the other members (provenance
"propagated"); when two members are *directly* bound to different values the
class gets an equality violation but both bindings are retained, so an
interface can render the conflict.  General constraints are evaluated only
once every variable they mention is bound; until then they are deferred.

Values bound inside zero-or-more repetitions use paths with a 1-based
instance index right after the repetition's own name (e.g. preds/rep1/2/...);
their domain is the one of the static template variable.
"""

from __future__ import annotations

import datetime
import re
from dataclasses import dataclass, field
from typing import Any, Optional

from .ast import UnboundInExpr, eval_expr
from .choices import (
    KIND_SELECTION,
    ChoiceModel,
    ChoiceVariable,
    EnumeratedInts,
    Naturals,
    PredicateDom,
    QualifiedName,
    QueryDom,
    ResolvedConstraint,
    resolve_path,
)
from .errors import (
    BackendUnavailableError,
    DomainError,
    UnboundParameterError,
    UnknownVariableError,
)
from .values import Value, render_value, value_from_json, value_to_json

DIRECT = "direct"
PROPAGATED = "propagated"
PARSED = "parsed-from-text"
DEFAULT = "default"


@dataclass
class BoundValue:
    value: Value
    provenance: str
    source: Optional[QualifiedName] = None  # set for propagated bindings
    seq: int = 0  # bind order, used to replay propagation


@dataclass
class Violation:
    kind: str  # "constraint" or "equality"
    involved: tuple[QualifiedName, ...]
    message: str
    constraint: Optional[ResolvedConstraint] = None

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "involved": [str(q) for q in self.involved],
            "message": self.message,
        }


@dataclass
class BindEffects:
    """What a bind/unbind changed besides the named variable."""

    propagated: list[QualifiedName] = field(default_factory=list)
    removed: list[QualifiedName] = field(default_factory=list)
    new_violations: list[Violation] = field(default_factory=list)
    cleared_violations: list[Violation] = field(default_factory=list)


def resolve_runtime_variable(model: ChoiceModel, qname: QualifiedName) -> ChoiceVariable:
    """Map a runtime path (repetition instances, recursion levels) to the
    variability site it denotes."""
    found = model.by_qname.get(qname)
    if found is not None:
        return found
    return resolve_path(model.ast, qname, star_cap=model.star_cap)


class BindingState:
    """Mutable per-session store; mutations must be serialized by the caller."""

    def __init__(self, model: ChoiceModel, backend=None):
        self.model = model
        self.backend = backend
        self.bindings: dict[QualifiedName, BoundValue] = {}
        self.violations: list[Violation] = []
        self._seq = 0

    # -- queries -----------------------------------------------------------

    def value(self, qname: QualifiedName) -> Optional[Value]:
        bound = self.bindings.get(qname)
        return bound.value if bound else None

    def is_bound(self, qname: QualifiedName) -> bool:
        return qname in self.bindings

    def resolve(self, name) -> QualifiedName:
        if isinstance(name, QualifiedName):
            qname = name
        else:
            qname = QualifiedName.parse(str(name))
        try:
            resolve_runtime_variable(self.model, qname)
            return qname
        except UnknownVariableError:
            pass
        return self.model.lookup(str(qname)).qname

    # -- mutations ----------------------------------------------------------

    def bind(self, name, value: Value, provenance: str = DIRECT) -> BindEffects:
        """Validate and store a value; propagate through the equality class.

        Raises DomainError (state unchanged) when the value fails the
        variable's domain; constraint violations do not raise, they are
        recorded and reported in the returned effects.
        """
        qname = self.resolve(name)
        var = resolve_runtime_variable(self.model, qname)
        validate_value(var, value, self.backend, state=self, at=qname)
        # everything the propagation will touch must accept the value too
        targets: list[QualifiedName] = []
        for mate in sorted(self.model.class_of(qname)):
            if mate == qname:
                continue
            current = self.bindings.get(mate)
            if current is None or current.provenance == PROPAGATED:
                validate_value(self.model.by_qname[mate], value, self.backend,
                               state=self, at=mate)
                targets.append(mate)
        before = {(v.kind, v.involved, v.message) for v in self.violations}
        self._seq += 1
        self.bindings[qname] = BoundValue(value, provenance, seq=self._seq)
        effects = BindEffects()
        for mate in targets:
            self._seq += 1
            self.bindings[mate] = BoundValue(value, PROPAGATED, source=qname, seq=self._seq)
            effects.propagated.append(mate)
        old = list(self.violations)
        self._recheck_violations()
        after = {(v.kind, v.involved, v.message) for v in self.violations}
        effects.new_violations = [
            v for v in self.violations if (v.kind, v.involved, v.message) not in before
        ]
        effects.cleared_violations = [
            v for v in old if (v.kind, v.involved, v.message) not in after
        ]
        return effects

    def unbind(self, name) -> BindEffects:
        """Remove a binding and everything propagated from it; idempotent.

        When another member of the equality class is still directly bound,
        its value re-propagates so the class stays uniformly bound."""
        qname = self.resolve(name)
        effects = BindEffects()
        if qname not in self.bindings:
            return effects
        old = list(self.violations)
        del self.bindings[qname]
        effects.removed.append(qname)
        for other, bound in list(self.bindings.items()):
            if bound.provenance == PROPAGATED and bound.source == qname:
                del self.bindings[other]
                effects.removed.append(other)
        repropagated = self._repropagate_class(qname)
        effects.removed = [q for q in effects.removed if q not in repropagated]
        effects.propagated.extend(repropagated)
        self._recheck_violations()
        after = {(v.kind, v.involved, v.message) for v in self.violations}
        effects.cleared_violations = [
            v for v in old if (v.kind, v.involved, v.message) not in after
        ]
        return effects

    def _repropagate_class(self, qname: QualifiedName) -> list[QualifiedName]:
        """Refill unbound members from the newest direct binding in the class."""
        cls = self.model.class_of(qname)
        if len(cls) < 2:
            return []
        direct = [
            (m, self.bindings[m]) for m in sorted(cls)
            if m in self.bindings and self.bindings[m].provenance != PROPAGATED
        ]
        if not direct:
            return []
        source, newest = max(direct, key=lambda kv: kv[1].seq)
        filled = []
        for member in sorted(cls):
            if member not in self.bindings:
                self._seq += 1
                self.bindings[member] = BoundValue(
                    newest.value, PROPAGATED, source=source, seq=self._seq
                )
                filled.append(member)
        return filled

    def clear(self):
        self.bindings.clear()
        self.violations = []

    # -- violations ----------------------------------------------------------

    def _recheck_violations(self):
        violations: list[Violation] = []
        for cls in self.model.classes:
            direct_values = {}
            for member in sorted(cls):
                bound = self.bindings.get(member)
                if bound and bound.provenance != PROPAGATED:
                    direct_values[member] = bound.value
            if len(set(map(render_value, direct_values.values()))) > 1:
                names = ", ".join(str(m) for m in sorted(direct_values))
                violations.append(
                    Violation(
                        kind="equality",
                        involved=tuple(sorted(cls)),
                        message=f"variables {names} must be equal but differ",
                    )
                )
        for rc in self.model.constraints:
            result = self._eval_constraint(rc)
            if result is False:
                from .formatter import format_bool_expr

                expr_text = format_bool_expr(rc.constraint.expr)
                violations.append(
                    Violation(
                        kind="constraint",
                        involved=tuple(rc.involved()),
                        message=f"constraint violated: {expr_text}",
                        constraint=rc,
                    )
                )
        self.violations = violations

    def _eval_constraint(self, rc: ResolvedConstraint) -> Optional[bool]:
        """True/False when all mentioned variables are bound, None otherwise."""

        def lookup(path: tuple[str, ...]):
            targets = rc.bindings.get(path)
            if not targets:
                raise KeyError(path)
            for qname in targets:
                bound = self.bindings.get(qname)
                if bound is not None:
                    return bound.value
            raise KeyError(path)

        try:
            return bool(eval_expr(rc.constraint.expr, lookup))
        except UnboundInExpr:
            return None

    def violations_touching(self, qnames: set[QualifiedName]) -> list[Violation]:
        return [v for v in self.violations if set(v.involved) & qnames]

    # -- persistence ----------------------------------------------------------

    def to_json(self) -> dict[str, Any]:
        items = sorted(self.bindings.items(), key=lambda kv: kv[1].seq)
        return {
            "bindings": {
                str(q): dict(value_to_json(b.value), provenance=b.provenance)
                for q, b in items
            },
            "violations": [v.to_json() for v in self.violations],
        }

    @classmethod
    def from_json(cls, model: ChoiceModel, data: dict[str, Any], backend=None) -> "BindingState":
        """Rebuild a state by replaying the non-propagated bindings in order."""
        state = cls(model, backend)
        for name, entry in data.get("bindings", {}).items():
            if entry.get("provenance", DIRECT) == PROPAGATED:
                continue
            state.bind(name, value_from_json(entry), provenance=entry.get("provenance", DIRECT))
        return state


# ---------------------------------------------------------------------------
# Domain validation
# ---------------------------------------------------------------------------

_INT_RE = re.compile(r"[+-]?\d+\Z")


def _check_scalar_type(value: Value, type_name: str) -> bool:
    if type_name == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    if type_name == "float":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if type_name in ("str", "rel", "attr"):
        return isinstance(value, str)
    if type_name == "date":
        return isinstance(value, datetime.date)
    return False


def coerce_to_type(value: Any, type_name: str) -> Value:
    """Best-effort conversion of payload values to a domain's base type."""
    if type_name == "int" and isinstance(value, str) and _INT_RE.match(value):
        return int(value)
    if type_name == "int" and isinstance(value, float) and value.is_integer():
        return int(value)
    if type_name == "float" and isinstance(value, (int, str)):
        try:
            return float(value)
        except ValueError:
            return value
    if type_name == "date" and isinstance(value, str):
        try:
            return datetime.date.fromisoformat(value)
        except ValueError:
            return value
    return value


def _relation_for_param(model: ChoiceModel, state: Optional["BindingState"],
                        param: str, at: Optional[QualifiedName]) -> str:
    """Current relation name held by the variable of the param rule."""
    if state is None:
        raise UnboundParameterError(str(at) if at else "?", param)
    candidates = [v for v in model.variables if v.rule == param]
    if not candidates:
        raise UnboundParameterError(str(at) if at else "?", param)
    if at is not None and len(candidates) > 1:
        # prefer the instance sharing the longest path prefix
        def shared(v: ChoiceVariable) -> int:
            n = 0
            for a, b in zip(v.qname.path, at.path):
                if a != b:
                    break
                n += 1
            return n

        candidates.sort(key=lambda v: (-shared(v), v.qname))
    var = candidates[0]
    bound = state.bindings.get(var.qname)
    if bound is None:
        raise UnboundParameterError(str(at) if at else str(var.qname), param)
    value = bound.value
    if var.kind == KIND_SELECTION:
        # selection over relation literals: map the index to the literal
        from .ast import Literal, Selection

        site = var.site
        if isinstance(site, Selection) and isinstance(value, int):
            alt = site.alternatives[value - 1]
            if isinstance(alt, Literal):
                return alt.text
    return str(value)


def validate_value(cv: ChoiceVariable, value: Value, backend=None, *,
                   state: Optional[BindingState] = None,
                   at: Optional[QualifiedName] = None) -> None:
    """Raise DomainError unless `value` is a member of cv's domain.

    `backend` is required for query domains and rel/attr-typed predicate
    domains; `state` supplies the relation binding that parameterizes attr
    checks.
    """
    qname = str(at or cv.qname)
    domain = cv.domain
    if isinstance(domain, EnumeratedInts):
        if not isinstance(value, int) or isinstance(value, bool):
            raise DomainError(qname, value, "an integer index is required")
        if not (domain.lo <= value <= domain.hi):
            raise DomainError(qname, value, f"outside {domain}")
        return
    if isinstance(domain, Naturals):
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise DomainError(qname, value, "a repetition count must be a natural number")
        return
    if isinstance(domain, QueryDom):
        if backend is None:
            raise BackendUnavailableError(f"validate '{qname}' against a query domain")
        members = backend.eval_query_domain(domain.query)
        probe = value if isinstance(value, tuple) else (value,)
        if not backend.domain_contains(domain.query, probe, members):
            raise DomainError(qname, value, "not a row of the domain query's result")
        return
    if isinstance(domain, PredicateDom):
        base = domain.base_type
        if not _check_scalar_type(value, base.name):
            raise DomainError(qname, value, f"expected a {base.name} value")
        if domain.regex is not None:
            if not re.fullmatch(domain.regex, str(value)):
                raise DomainError(qname, value, f"does not match /{domain.regex}/")
        if base.name == "rel":
            if backend is None:
                raise BackendUnavailableError(f"validate relation name '{qname}'")
            snapshot = backend.snapshot_catalog()
            if not snapshot.has_relation(str(value)):
                raise DomainError(qname, value, "does not name a relation in the catalog")
        if base.name == "attr":
            if backend is None:
                raise BackendUnavailableError(f"validate attribute name '{qname}'")
            snapshot = backend.snapshot_catalog()
            if base.param is None:
                if not snapshot.has_attribute_anywhere(str(value)):
                    raise DomainError(qname, value, "does not name any attribute")
            else:
                relation = _relation_for_param(cv_model(cv, state), state, base.param, at)
                if not snapshot.has_attribute(relation, str(value)):
                    raise DomainError(
                        qname, value, f"does not name an attribute of relation '{relation}'"
                    )
        if domain.predicate is not None:
            try:
                ok = bool(eval_expr(domain.predicate, {(domain.var,): value}))
            except UnboundInExpr as exc:
                raise DomainError(
                    qname, value, f"predicate references unknown name {exc}"
                ) from None
            if not ok:
                raise DomainError(qname, value, "predicate evaluates to false")
        return
    raise TypeError(f"unknown domain descriptor {domain!r}")


def cv_model(cv: ChoiceVariable, state: Optional[BindingState]) -> ChoiceModel:
    if state is not None:
        return state.model
    raise UnboundParameterError(str(cv.qname), cv.domain.base_type.param or "?")
