"""Enumerate the query space a grammar can express.

Counts the distinct, constraint-satisfying complete reductions per starting
rule.  Domains must be finite or finitely enumerable: selections enumerate
their indexes, bounded int predicates their range, membership predicates
their listed values, query domains their result rows (which needs a
backend), repetitions run up to their cap.  Open domains (plain str/float
predicates, regex terminals) raise InfiniteDomain.
"""

from __future__ import annotations

import datetime
import itertools
from dataclasses import dataclass
from typing import Iterator, Optional

from .ast import (
    BoolExpr,
    BoolOp,
    Compare,
    Expr,
    GrammarAst,
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
    UnboundInExpr,
    VarRef,
    ZeroOrMore,
    eval_expr,
)
from .choices import ChoiceModel, QualifiedName, _inline_names, _ref_names
from .errors import BackendUnavailableError, DigError, InfiniteDomainError
from .values import Value, render_value


class EnumerationLimitError(DigError):
    def __init__(self, limit: int):
        super().__init__(f"query space exceeds the counting limit of {limit}")


@dataclass
class EnumerationResult:
    per_rule: dict[str, tuple[int, Optional[list[str]]]]

    @property
    def count(self) -> int:
        return sum(count for count, _ in self.per_rule.values())

    @property
    def queries(self) -> Optional[list[str]]:
        if any(strings is None for _, strings in self.per_rule.values()):
            return None
        out: list[str] = []
        for _, strings in self.per_rule.values():
            out.extend(strings or [])
        return out

    def rule_queries(self, rule: str) -> Optional[list[str]]:
        return self.per_rule[rule][1]


def _int_candidates(predicate: Optional[BoolExpr], var: str) -> Optional[list[int]]:
    """Candidate ints from bounds/members found in the predicate's conjuncts."""
    if predicate is None:
        return None
    lo: Optional[int] = None
    hi: Optional[int] = None
    listed: Optional[list] = None

    def scan(node: BoolExpr):
        nonlocal lo, hi, listed
        if isinstance(node, BoolOp) and node.op == "and":
            for operand in node.operands:
                scan(operand)
            return
        if isinstance(node, Membership) and node.item == VarRef((var,)):
            values = [v.value for v in node.values if isinstance(v, Num)]
            if len(values) == len(node.values):
                listed = values if listed is None else [v for v in listed if v in values]
            return
        if isinstance(node, Compare):
            var_left = node.left == VarRef((var,))
            var_right = node.right == VarRef((var,))
            lit = node.right if var_left else node.left if var_right else None
            if lit is None or not isinstance(lit, Num):
                return
            op = node.op
            if var_right:  # mirror "n OP var" into "var OP' n"
                op = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}.get(op, op)
            value = lit.value
            if op in ("<", "<="):
                bound = int(value) if op == "<=" else int(value) - 1
                hi = bound if hi is None else min(hi, bound)
            elif op in (">", ">="):
                bound = int(value) if op == ">=" else int(value) + 1
                lo = bound if lo is None else max(lo, bound)
            elif op == "=":
                lo = max(lo, int(value)) if lo is not None else int(value)
                hi = min(hi, int(value)) if hi is not None else int(value)

    scan(predicate)
    if listed is not None:
        return [int(v) for v in listed]
    if lo is not None and hi is not None:
        return list(range(lo, hi + 1))
    return None


def _literal_candidates(predicate: Optional[BoolExpr], var: str) -> Optional[list[Value]]:
    """Values enumerated by membership/equality, possibly or-combined."""
    if predicate is None:
        return None
    if isinstance(predicate, Membership) and predicate.item == VarRef((var,)):
        out: list[Value] = []
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
        return None
    if isinstance(predicate, BoolOp):
        parts = [_literal_candidates(op, var) for op in predicate.operands]
        if predicate.op == "or":
            if any(p is None for p in parts):
                return None
            merged: list[Value] = []
            for p in parts:
                merged.extend(p or [])
            return merged
        for p in parts:  # and: any enumerable conjunct bounds the domain
            if p is not None:
                return p
    return None


def _domain_values(expr, qname: QualifiedName, backend) -> list[Value]:
    if isinstance(expr, RegexTerm):
        raise InfiniteDomainError(str(qname), "regex terminals are not enumerable")
    if isinstance(expr, QueryDomain):
        if backend is None:
            raise BackendUnavailableError(f"enumerate the query domain of '{qname}'")
        rows = backend.eval_query_domain(expr.query)
        return [row[0] if len(row) == 1 else tuple(row) for row in rows]
    if not isinstance(expr, PredicateDomain):
        raise TypeError(f"not an enumerable terminal: {expr!r}")
    base = expr.base_type.name
    predicate = expr.predicate
    if base == "int":
        candidates = _int_candidates(predicate, expr.var)
    else:
        candidates = _literal_candidates(predicate, expr.var)
        if candidates is not None and base == "date":
            candidates = [
                datetime.date.fromisoformat(v) if isinstance(v, str) else v
                for v in candidates
            ]
    if candidates is None:
        raise InfiniteDomainError(
            str(qname), f"open {base} predicate domain has no enumerable bounds"
        )
    if predicate is None:
        return candidates
    kept = []
    for value in candidates:
        try:
            if bool(eval_expr(predicate, {(expr.var,): value})):
                kept.append(value)
        except UnboundInExpr:
            raise InfiniteDomainError(str(qname), "predicate uses a foreign variable")
    return kept


def _merge_bindings(parts) -> Optional[dict]:
    """Union the binding maps; None when one path gets two different values
    (two same-named annotations share one qualified path)."""
    merged: dict = {}
    for got in parts:
        for qname, value in got.items():
            if qname in merged and render_value(merged[qname]) != render_value(value):
                return None
            merged[qname] = value
    return merged


class _Enumerator:
    def __init__(self, model: ChoiceModel, backend, star_max: int, limit: int):
        self.model = model
        self.ast = model.ast
        self.backend = backend
        self.star_max = star_max
        self.limit = limit
        self.produced = 0

    def tick(self):
        self.produced += 1
        if self.produced > self.limit:
            raise EnumerationLimitError(self.limit)

    def enum_rule(self, rule_name: str, path: tuple[str, ...]) -> Iterator[tuple[str, dict]]:
        rule = self.ast.rules[rule_name]
        ctx = (rule_name, _ref_names(rule.body), _inline_names(rule.body))
        yield from self.enum(rule.body, path, ctx, at_root=True)

    def enum(self, expr: Expr, path, ctx, at_root: bool) -> Iterator[tuple[str, dict]]:
        rule_name, ref_names, inline_names = ctx
        if isinstance(expr, Literal):
            yield expr.text, {}
            return
        if isinstance(expr, Ref):
            yield from self.enum_rule(expr.rule, path + (ref_names[id(expr)],))
            return
        if isinstance(expr, Sequence):
            parts = [list(self.enum(item, path, ctx, at_root=False)) for item in expr.items]
            for combo in itertools.product(*parts):
                self.tick()
                bindings = _merge_bindings(got for _, got in combo)
                if bindings is None:
                    continue  # one path bound twice with different values
                text = "".join(part for part, _ in combo)
                yield text, bindings
            return
        site_path = path if at_root else path + (inline_names[id(expr)],)
        if not site_path:
            site_path = (rule_name,)
        qname = QualifiedName(site_path)
        if isinstance(expr, Selection):
            for index, alt in enumerate(expr.alternatives, start=1):
                for text, bindings in self.enum(alt, site_path, ctx, at_root=False):
                    self.tick()
                    merged = dict(bindings)
                    merged[qname] = index
                    yield text, merged
            return
        if isinstance(expr, ZeroOrMore):
            cap = getattr(self.model.by_qname.get(qname), "domain", None)
            cap_value = getattr(cap, "cap", None) or self.star_max
            cap_value = min(cap_value, self.star_max)
            for count in range(0, cap_value + 1):
                instance_lists = [
                    list(self.enum(expr.body, site_path + (str(i),), ctx, at_root=False))
                    for i in range(1, count + 1)
                ]
                for combo in itertools.product(*instance_lists):
                    self.tick()
                    merged = _merge_bindings(got for _, got in combo)
                    if merged is None:
                        continue
                    merged[qname] = count
                    text = "".join(part for part, _ in combo)
                    yield text, merged
            return
        for value in _domain_values(expr, qname, self.backend):
            self.tick()
            yield render_value(value), {qname: value}


def enumerate_queries(
    model: ChoiceModel,
    backend=None,
    cap: int = 100000,
    star_max: int = 4,
    limit: int = 2_000_000,
) -> EnumerationResult:
    """Count (and optionally list) every distinct reachable reduction.

    The count is always exact; the string lists are included only for rules
    whose count is <= cap.  `star_max` bounds repetition expansion and
    `limit` aborts runaway spaces with EnumerationLimitError.
    """
    include_root = len(model.ast.starting_rules) > 1
    per_rule: dict[str, tuple[int, Optional[list[str]]]] = {}
    enumerator = _Enumerator(model, backend, star_max, limit)
    for rule in model.ast.starting_rules:
        prefix = (rule,) if include_root else ()
        seen: set[str] = set()
        ordered: list[str] = []
        for text, bindings in enumerator.enum_rule(rule, prefix):
            if not self_consistent(model, bindings):
                continue
            if text not in seen:
                seen.add(text)
                ordered.append(text)
        if len(ordered) <= cap:
            per_rule[rule] = (len(ordered), ordered)
        else:
            per_rule[rule] = (len(ordered), None)
    return EnumerationResult(per_rule=per_rule)


def self_consistent(model: ChoiceModel, bindings: dict) -> bool:
    """Equality classes hold equal values and no constraint evaluates false
    (constraints touching unbound variables are deferred)."""
    for cls in model.classes:
        values = [render_value(bindings[q]) for q in cls if q in bindings]
        if len(set(values)) > 1:
            return False

    for rc in model.constraints:
        def lookup(path: tuple[str, ...]):
            targets = rc.bindings.get(path)
            if not targets:
                raise KeyError(path)
            for qname in targets:
                if qname in bindings:
                    return bindings[qname]
            raise KeyError(path)

        try:
            if not bool(eval_expr(rc.constraint.expr, lookup)):
                return False
        except UnboundInExpr:
            continue
    return True
