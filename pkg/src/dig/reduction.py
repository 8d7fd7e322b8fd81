"""Reduce a bound grammar to query strings.

A starting rule reduces once every choice variable reachable under the
current selections is bound: literals contribute their text verbatim and
bound domain values are rendered canonically (see values.render_value).
Variables sitting in unselected alternatives are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .ast import (
    Expr,
    GrammarAst,
    Literal,
    PredicateDomain,
    QueryDomain,
    Ref,
    RegexTerm,
    Selection,
    Sequence,
    ZeroOrMore,
)
from .binding import BindingState, Violation
from .choices import ChoiceModel, QualifiedName, _inline_names, _ref_names
from .errors import IncompleteError, UnknownRuleError, ViolationsPresentError
from .values import render_value


@dataclass
class RuleReduction:
    rule: str
    query: Optional[str] = None
    unbound: list[QualifiedName] = field(default_factory=list)
    violations: list[Violation] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return self.query is not None

    def to_json(self) -> dict:
        if self.complete:
            return {"rule": self.rule, "query": self.query}
        return {
            "rule": self.rule,
            "unbound": [str(q) for q in self.unbound],
            "violations": [v.to_json() for v in self.violations],
        }


@dataclass
class ReductionResult:
    per_rule: dict[str, RuleReduction]

    def __getitem__(self, rule: str) -> RuleReduction:
        return self.per_rule[rule]

    def complete(self) -> bool:
        return all(r.complete for r in self.per_rule.values())

    def queries(self) -> dict[str, str]:
        return {name: r.query for name, r in self.per_rule.items() if r.complete}


class _Reducer:
    def __init__(self, model: ChoiceModel, state: BindingState):
        self.model = model
        self.ast = model.ast
        self.state = state
        self.parts: list[str] = []
        self.unbound: list[QualifiedName] = []
        self.reached: set[QualifiedName] = set()

    def reduce_rule(self, rule_name: str, path: tuple[str, ...]):
        rule = self.ast.rules.get(rule_name)
        if rule is None:
            raise UnknownRuleError(rule_name)
        ctx = (rule_name, _ref_names(rule.body), _inline_names(rule.body))
        self.visit(rule.body, path, ctx, at_root=True)

    def visit(self, expr: Expr, path: tuple[str, ...], ctx, at_root: bool):
        rule_name, ref_names, inline_names = ctx
        if isinstance(expr, Literal):
            self.parts.append(expr.text)
            return
        if isinstance(expr, Ref):
            self.reduce_rule(expr.rule, path + (ref_names[id(expr)],))
            return
        if isinstance(expr, Sequence):
            for item in expr.items:
                self.visit(item, path, ctx, at_root=False)
            return
        site_path = path if at_root else path + (inline_names[id(expr)],)
        if not site_path:
            site_path = (rule_name,)
        qname = QualifiedName(site_path)
        self.reached.add(qname)
        value = self.state.value(qname)
        if isinstance(expr, Selection):
            if value is None:
                self.unbound.append(qname)
                return
            alt = expr.alternatives[int(value) - 1]
            self.visit(alt, site_path, ctx, at_root=False)
            return
        if isinstance(expr, ZeroOrMore):
            if value is None:
                self.unbound.append(qname)
                return
            for i in range(1, int(value) + 1):
                self.visit(expr.body, site_path + (str(i),), ctx, at_root=False)
            return
        if isinstance(expr, (PredicateDomain, QueryDomain, RegexTerm)):
            if value is None:
                self.unbound.append(qname)
                return
            self.parts.append(render_value(value))
            return
        raise TypeError(f"unexpected node {expr!r}")


def reduce_grammar(
    model: ChoiceModel, state: BindingState, rules: Optional[list[str]] = None
) -> ReductionResult:
    """Reduce each requested starting rule (default: all of them).

    Rules whose reachable variables intersect a violation are reported as
    blocked; rules with unbound reachable variables list them.  Nothing
    raises here - use reduce_rule_strict for the raising form.
    """
    targets = list(rules) if rules is not None else list(model.ast.starting_rules)
    include_root = len(model.ast.starting_rules) > 1
    out: dict[str, RuleReduction] = {}
    for rule in targets:
        reducer = _Reducer(model, state)
        reducer.reduce_rule(rule, (rule,) if include_root else ())
        reached = reducer.reached | set(reducer.unbound)
        violations = state.violations_touching(reached)
        if violations:
            out[rule] = RuleReduction(rule=rule, unbound=reducer.unbound,
                                      violations=violations)
        elif reducer.unbound:
            out[rule] = RuleReduction(rule=rule, unbound=reducer.unbound)
        else:
            out[rule] = RuleReduction(rule=rule, query="".join(reducer.parts))
    return ReductionResult(per_rule=out)


def reduce_rule_strict(model: ChoiceModel, state: BindingState, rule: str) -> str:
    """Reduce one starting rule or raise Incomplete/ViolationsPresent."""
    result = reduce_grammar(model, state, [rule]).per_rule[rule]
    if result.violations:
        raise ViolationsPresentError(result.violations)
    if not result.complete:
        raise IncompleteError(rule, [str(q) for q in result.unbound])
    return result.query


def reachable_variables(model: ChoiceModel, state: BindingState,
                        rule: str) -> set[QualifiedName]:
    """Variables reachable under the state's current selections."""
    include_root = len(model.ast.starting_rules) > 1
    reducer = _Reducer(model, state)
    reducer.reduce_rule(rule, (rule,) if include_root else ())
    return reducer.reached | set(reducer.unbound)
