"""Parse free-text input against a subgrammar and bind what it matched.

Semantics are PEG: alternatives are tried in order and the first match
commits; repetition is greedy and never gives back.  Matching is memoized
(packrat) on (node, position, path).  A successful parse binds every choice
variable in the derivation with provenance "parsed-from-text", running the
same propagation and constraint checks as an ordinary bind; constraint
violations are returned to the caller rather than dropped.

Domain terminals match the longest prefix of their lexical shape whose
typed value passes the domain, retrying shorter prefixes on domain failure
(so adjacent unseparated numeric terminals can still split); regex
terminals match their pattern; query domains match the longest member row
whose canonical text occurs at the position (which needs a backend).  A
predicate whose top level enumerates values (x in [...] or x = v) matches
those values directly, longest first.
"""

from __future__ import annotations

import datetime
import re
from dataclasses import dataclass
from typing import Optional

from .ast import (
    BoolExpr,
    BoolOp,
    Compare,
    Expr,
    Literal,
    Membership,
    Num,
    PredicateDomain,
    QueryDomain,
    Ref,
    RegexTerm,
    Selection,
    Sequence,
    StrLit,
    VarRef,
    ZeroOrMore,
)
from .binding import PARSED, BindEffects, BindingState, validate_value
from .choices import ChoiceModel, QualifiedName, _inline_names, _ref_names
from .errors import (
    BackendUnavailableError,
    DomainError,
    TextParseError,
    UnboundParameterError,
    UnknownRuleError,
)
from .values import Value, render_value

_INT_PAT = re.compile(r"[+-]?\d+")
_FLOAT_PAT = re.compile(r"[+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?")
_DATE_PAT = re.compile(r"\d{4}-\d{2}-\d{2}")
_NAME_PAT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass
class _Miss:
    pos: int
    expected: tuple[str, ...]


class _Matcher:
    def __init__(self, model: ChoiceModel, text: str, backend, state=None):
        self.model = model
        self.ast = model.ast
        self.text = text
        self.backend = backend
        self.state = state  # read-only during the match; binds happen after
        self.memo: dict = {}
        self.active: set[tuple[str, int]] = set()  # left-recursion guard
        self.far_pos = 0
        self.far_expected: set[str] = set()

    def fail(self, pos: int, expected: str) -> None:
        if pos > self.far_pos:
            self.far_pos = pos
            self.far_expected = {expected}
        elif pos == self.far_pos:
            self.far_expected.add(expected)

    # returns (new_pos, bindings) or None
    def match_rule(self, rule_name: str, pos: int, path: tuple[str, ...]):
        rule = self.ast.rules.get(rule_name)
        if rule is None:
            raise UnknownRuleError(rule_name)
        key = (rule_name, pos)
        if key in self.active:
            return None  # left recursion cannot make progress
        self.active.add(key)
        try:
            ctx = (rule_name, _ref_names(rule.body), _inline_names(rule.body))
            return self.match(rule.body, pos, path, ctx, at_root=True)
        finally:
            self.active.discard(key)

    def match(self, expr: Expr, pos: int, path: tuple[str, ...], ctx, at_root: bool):
        key = (id(expr), pos, path)
        if key in self.memo:
            return self.memo[key]
        result = self._match(expr, pos, path, ctx, at_root)
        self.memo[key] = result
        return result

    def _match(self, expr: Expr, pos: int, path, ctx, at_root: bool):
        rule_name, ref_names, inline_names = ctx
        text = self.text
        if isinstance(expr, Literal):
            if text.startswith(expr.text, pos):
                return pos + len(expr.text), []
            self.fail(pos, repr(expr.text))
            return None
        if isinstance(expr, Ref):
            return self.match_rule(expr.rule, pos, path + (ref_names[id(expr)],))
        if isinstance(expr, Sequence):
            bindings = []
            cur = pos
            for item in expr.items:
                res = self.match(item, cur, path, ctx, at_root=False)
                if res is None:
                    return None
                cur, got = res
                bindings.extend(got)
            return cur, bindings
        site_path = path if at_root else path + (inline_names[id(expr)],)
        if not site_path:
            site_path = (rule_name,)
        qname = QualifiedName(site_path)
        if isinstance(expr, Selection):
            for index, alt in enumerate(expr.alternatives, start=1):
                res = self.match(alt, pos, site_path, ctx, at_root=False)
                if res is not None:
                    cur, got = res
                    return cur, [(qname, index)] + got
            return None
        if isinstance(expr, ZeroOrMore):
            count = 0
            cur = pos
            bindings = []
            while True:
                res = self.match(
                    expr.body, cur, site_path + (str(count + 1),), ctx, at_root=False
                )
                if res is None or res[0] == cur:
                    break  # no progress: stop to guarantee termination
                cur, got = res
                bindings.extend(got)
                count += 1
            return cur, [(qname, count)] + bindings
        if isinstance(expr, RegexTerm):
            m = expr.compiled().match(text, pos)
            if m is None:
                self.fail(pos, f"/{expr.pattern}/")
                return None
            return m.end(), [(qname, m.group(0))]
        if isinstance(expr, PredicateDomain):
            return self._match_predicate(expr, pos, qname)
        if isinstance(expr, QueryDomain):
            return self._match_query_domain(expr, pos, qname)
        raise TypeError(f"unexpected node {expr!r}")

    def _match_predicate(self, expr: PredicateDomain, pos: int, qname: QualifiedName):
        base = expr.base_type.name
        listed = _listed_values(expr.predicate, expr.var)
        if listed is not None:
            for value in sorted(listed, key=lambda v: -len(render_value(v))):
                rendered = render_value(value)
                if self.text.startswith(rendered, pos):
                    return pos + len(rendered), [(qname, value)]
            self.fail(pos, f"one of the {len(listed)} values of {qname}")
            return None
        pattern = {"int": _INT_PAT, "float": _FLOAT_PAT, "date": _DATE_PAT}.get(
            base, _NAME_PAT
        )
        m = pattern.match(self.text, pos)
        if not m:
            self.fail(pos, f"a {base} value")
            return None
        lexeme = m.group(0)
        var = _probe_var(self.model, qname)
        # longest prefix whose value passes the domain; adjacent unseparated
        # terminals otherwise could not split (e.g. "72" as 7 then 2)
        for end in range(len(lexeme), 0, -1):
            raw = lexeme[:end]
            if end < len(lexeme) and not pattern.fullmatch(raw):
                continue
            value: Value
            try:
                if base == "int":
                    value = int(raw)
                elif base == "float":
                    value = float(raw)
                elif base == "date":
                    value = datetime.date.fromisoformat(raw)
                else:
                    value = raw
            except ValueError:
                continue
            if render_value(value) != raw:
                continue  # only canonical forms keep reduce(parse(s)) == s
            try:
                validate_value(var, value, self.backend, state=self.state, at=qname)
            except DomainError:
                continue
            except UnboundParameterError:
                pass  # parameterizing relation binds later in this derivation
            return pos + end, [(qname, value)]
        self.fail(pos, f"a valid {base} value for {qname}")
        return None

    def _match_query_domain(self, expr: QueryDomain, pos: int, qname: QualifiedName):
        if self.backend is None:
            raise BackendUnavailableError(f"parse input against query domain of {qname}")
        values = self.backend.eval_query_domain(expr.query)
        best = None
        for row in values:
            value = row[0] if len(row) == 1 else tuple(row)
            rendered = render_value(value)
            if self.text.startswith(rendered, pos):
                if best is None or len(rendered) > len(render_value(best)):
                    best = value
        if best is None:
            self.fail(pos, f"a value of {qname}'s query domain")
            return None
        return pos + len(render_value(best)), [(qname, best)]


def _probe_var(model: ChoiceModel, qname: QualifiedName):
    from .binding import resolve_runtime_variable

    return resolve_runtime_variable(model, qname)


def _listed_values(predicate: Optional[BoolExpr], var: str) -> Optional[list[Value]]:
    """Values enumerated by a top-level membership/equality predicate."""
    if predicate is None:
        return None
    if isinstance(predicate, Membership) and predicate.item == VarRef((var,)):
        out = []
        for node in predicate.values:
            if isinstance(node, Num):
                out.append(node.value)
            elif isinstance(node, StrLit):
                out.append(node.value)
            else:
                return None
        return out
    if isinstance(predicate, Compare) and predicate.op == "=":
        sides = (predicate.left, predicate.right)
        if VarRef((var,)) in sides:
            other = sides[1] if sides[0] == VarRef((var,)) else sides[0]
            if isinstance(other, Num):
                return [other.value]
            if isinstance(other, StrLit):
                return [other.value]
    if isinstance(predicate, BoolOp) and predicate.op == "or":
        out = []
        for operand in predicate.operands:
            part = _listed_values(operand, var)
            if part is None:
                return None
            out.extend(part)
        return out
    return None


def match_input(model: ChoiceModel, target_rule: str, text: str, *,
                backend=None, at: Optional[QualifiedName] = None, state=None):
    """Lower-level parse: returns the (qname, value) bindings of the match
    without touching any state.  Raises TextParseError on failure."""
    if target_rule not in model.ast.rules:
        raise UnknownRuleError(target_rule)
    if at is not None:
        base = at.path
    elif target_rule in model.ast.starting_rules:
        base = (target_rule,) if len(model.ast.starting_rules) > 1 else ()
    else:
        base = _unique_path_for_rule(model, target_rule)
    matcher = _Matcher(model, text, backend, state=state)
    result = matcher.match_rule(target_rule, 0, base)
    if result is None or result[0] != len(text):
        pos = matcher.far_pos if result is None else result[0]
        expected = tuple(matcher.far_expected) if result is None else ("end of input",)
        raise TextParseError(f"input does not match rule '{target_rule}'", pos, expected)
    seen: dict[QualifiedName, Value] = {}
    for qname, value in result[1]:
        if qname in seen and render_value(seen[qname]) != render_value(value):
            raise TextParseError(
                f"the input binds '{qname}' to both {seen[qname]!r} and {value!r}",
                len(text),
            )
        seen[qname] = value
    return result[1]


def _unique_path_for_rule(model: ChoiceModel, rule: str) -> tuple[str, ...]:
    paths = rule_paths(model, rule)
    if len(paths) == 1:
        return paths[0]
    raise TextParseError(
        f"rule '{rule}' is reachable at {len(paths)} paths; pass the target path", 0
    )


def rule_paths(model: ChoiceModel, rule: str) -> list[tuple[str, ...]]:
    """All static paths at which `rule` is referenced (cycle-cut)."""
    ast = model.ast
    include_root = len(ast.starting_rules) > 1
    found: list[tuple[str, ...]] = []

    def visit_rule(name: str, path: tuple[str, ...], stack: tuple[str, ...]):
        body = ast.rules[name].body
        ref_names = _ref_names(body)

        def walk(expr: Expr):
            if isinstance(expr, Ref):
                if expr.rule not in ast.rules:
                    return
                new_path = path + (ref_names[id(expr)],)
                if expr.rule == rule:
                    found.append(new_path)
                if expr.rule not in stack:
                    visit_rule(expr.rule, new_path, stack + (expr.rule,))
            elif isinstance(expr, Sequence):
                for item in expr.items:
                    walk(item)
            elif isinstance(expr, Selection):
                for alt in expr.alternatives:
                    walk(alt)
            elif isinstance(expr, ZeroOrMore):
                walk(expr.body)

        walk(body)

    for root in ast.starting_rules:
        prefix = (root,) if include_root else ()
        if root == rule:
            found.append(prefix)
        visit_rule(root, prefix, (root,))
    return found


def parse_input(state: BindingState, target_rule: str, text: str, *,
                at: Optional[QualifiedName] = None) -> tuple[BindEffects, dict[str, Value]]:
    """Parse `text` against the subgrammar rooted at `target_rule` and bind
    everything the derivation decided.

    Returns the merged bind effects and the {qname: value} map that was
    bound.  Raises TextParseError/DomainError before any state change;
    constraint violations are recorded in the state and reported through
    the effects, matching interactive bind semantics.
    """
    model = state.model
    bindings = match_input(model, target_rule, text, backend=state.backend,
                           at=at, state=state)
    snapshot = dict(state.bindings)
    effects = BindEffects()
    bound: dict[str, Value] = {}
    # apply in derivation order, deferring attr values whose parameterizing
    # relation binds later in the same derivation (SELECT col FROM table)
    pending = list(bindings)
    try:
        while pending:
            deferred = []
            progressed = False
            for qname, value in pending:
                try:
                    got = state.bind(qname, value, provenance=PARSED)
                except UnboundParameterError:
                    deferred.append((qname, value))
                    continue
                progressed = True
                bound[str(qname)] = value
                effects.propagated.extend(got.propagated)
                effects.new_violations.extend(got.new_violations)
                effects.cleared_violations.extend(got.cleared_violations)
            if deferred and not progressed:
                state.bind(*deferred[0], provenance=PARSED)  # raise for real
            pending = deferred
    except (DomainError, UnboundParameterError):
        state.bindings = snapshot
        state._recheck_violations()
        raise
    return effects, bound
