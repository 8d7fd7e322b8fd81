"""AST for data interface grammars.

A grammar is a set of named rules over parsing expressions (literals, regex
terminals, data-aware domain terminals, references, sequence, selection,
zero-or-more), plus standalone constraints over the grammar's choice
variables.  Nodes are frozen dataclasses; source locations are excluded from
equality so a formatted-and-reparsed grammar compares equal to the original.
"""

from __future__ import annotations

import datetime
import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

# ---------------------------------------------------------------------------
# Source locations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Loc:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


def _loc_field():
    return field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Value types (predicate-domain base types and rule type tags)
# ---------------------------------------------------------------------------

SCALAR_TYPES = ("int", "float", "str", "date")
NAME_TYPES = ("rel", "attr")


@dataclass(frozen=True)
class ValueType:
    """A base type: int, float, str, date, rel, or attr[param-rule]."""

    name: str
    param: Optional[str] = None  # only for attr

    def __post_init__(self):
        if self.name not in SCALAR_TYPES + NAME_TYPES:
            raise ValueError(f"unknown type {self.name!r}")
        if self.param is not None and self.name != "attr":
            raise ValueError("only attr takes a parameter")

    def __str__(self) -> str:
        if self.name == "attr" and self.param:
            return f"attr[{self.param}]"
        return self.name


# ---------------------------------------------------------------------------
# Predicate / constraint expression language
#
# Shared by predicate domains ({ x:int | x >= 1 and x <= 36 }) and standalone
# constraint statements (constraint $s <= $e).  Predicate variables are bare
# names; constraint variables are qualified paths.
# ---------------------------------------------------------------------------

Value = Union[int, float, str, bool, datetime.date, tuple]


class BoolExpr:
    """Base class for nodes of the expression language."""

    __slots__ = ()


@dataclass(frozen=True)
class Num(BoolExpr):
    value: Union[int, float]


@dataclass(frozen=True)
class StrLit(BoolExpr):
    value: str


@dataclass(frozen=True)
class BoolLit(BoolExpr):
    value: bool


@dataclass(frozen=True)
class VarRef(BoolExpr):
    """A variable: one element for predicate vars, a path for constraints."""

    path: tuple[str, ...]

    def __str__(self) -> str:
        return "/".join(self.path)


@dataclass(frozen=True)
class Compare(BoolExpr):
    op: str  # = != < <= > >=
    left: BoolExpr
    right: BoolExpr


@dataclass(frozen=True)
class Membership(BoolExpr):
    item: BoolExpr
    values: tuple[BoolExpr, ...]


@dataclass(frozen=True)
class BoolOp(BoolExpr):
    op: str  # and | or
    operands: tuple[BoolExpr, ...]


@dataclass(frozen=True)
class NotOp(BoolExpr):
    operand: BoolExpr


@dataclass(frozen=True)
class Arith(BoolExpr):
    op: str  # + - * /
    left: BoolExpr
    right: BoolExpr


class UnboundInExpr(Exception):
    """Raised during evaluation when a referenced variable has no value."""

    def __init__(self, path: tuple[str, ...]):
        self.path = path
        super().__init__("/".join(path))


def _coerce_pair(a: Value, b: Value) -> tuple[Value, Value]:
    # Dates written as ISO strings in source compare against date values.
    if isinstance(a, datetime.date) and isinstance(b, str):
        try:
            return a, datetime.date.fromisoformat(b)
        except ValueError:
            return str(a), b
    if isinstance(b, datetime.date) and isinstance(a, str):
        try:
            return datetime.date.fromisoformat(a), b
        except ValueError:
            return a, str(b)
    return a, b


def eval_expr(node: BoolExpr, env) -> Value:
    """Evaluate an expression; `env` maps variable paths to values.

    `env` is a callable taking the path tuple and returning the value, or
    raising UnboundInExpr.  A plain dict also works.
    """
    lookup = env.__getitem__ if hasattr(env, "__getitem__") else env
    return _eval(node, lookup)


def _eval(node: BoolExpr, lookup) -> Value:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, StrLit):
        return node.value
    if isinstance(node, BoolLit):
        return node.value
    if isinstance(node, VarRef):
        try:
            return lookup(node.path)
        except KeyError:
            raise UnboundInExpr(node.path) from None
    if isinstance(node, Compare):
        left, right = _coerce_pair(_eval(node.left, lookup), _eval(node.right, lookup))
        if node.op == "=":
            return left == right
        if node.op == "!=":
            return left != right
        if node.op == "<":
            return left < right
        if node.op == "<=":
            return left <= right
        if node.op == ">":
            return left > right
        if node.op == ">=":
            return left >= right
        raise ValueError(f"bad comparison op {node.op}")
    if isinstance(node, Membership):
        item = _eval(node.item, lookup)
        for v in node.values:
            a, b = _coerce_pair(item, _eval(v, lookup))
            if a == b:
                return True
        return False
    if isinstance(node, BoolOp):
        if node.op == "and":
            return all(bool(_eval(op, lookup)) for op in node.operands)
        return any(bool(_eval(op, lookup)) for op in node.operands)
    if isinstance(node, NotOp):
        return not bool(_eval(node.operand, lookup))
    if isinstance(node, Arith):
        left = _eval(node.left, lookup)
        right = _eval(node.right, lookup)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            return left / right
        raise ValueError(f"bad arithmetic op {node.op}")
    raise TypeError(f"not an expression node: {node!r}")


def expr_vars(node: BoolExpr) -> list[tuple[str, ...]]:
    """All variable paths mentioned in an expression, in source order."""
    out: list[tuple[str, ...]] = []

    def walk(n: BoolExpr):
        if isinstance(n, VarRef):
            out.append(n.path)
        elif isinstance(n, Compare):
            walk(n.left)
            walk(n.right)
        elif isinstance(n, Membership):
            walk(n.item)
            for v in n.values:
                walk(v)
        elif isinstance(n, BoolOp):
            for op in n.operands:
                walk(op)
        elif isinstance(n, NotOp):
            walk(n.operand)
        elif isinstance(n, Arith):
            walk(n.left)
            walk(n.right)

    walk(node)
    return out


# ---------------------------------------------------------------------------
# Parsing expressions
# ---------------------------------------------------------------------------


class Expr:
    """Base class for parsing-expression nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Literal(Expr):
    text: str
    loc: Optional[Loc] = _loc_field()


@dataclass(frozen=True)
class RegexTerm(Expr):
    pattern: str
    loc: Optional[Loc] = _loc_field()

    def compiled(self) -> re.Pattern:
        return re.compile(self.pattern)


@dataclass(frozen=True)
class PredicateDomain(Expr):
    var: str
    base_type: ValueType
    predicate: Optional[BoolExpr] = None  # None means always true
    loc: Optional[Loc] = _loc_field()


@dataclass(frozen=True)
class QueryDomain(Expr):
    query: str
    loc: Optional[Loc] = _loc_field()


@dataclass(frozen=True)
class Ref(Expr):
    rule: str
    annotation: Optional[str] = None  # the $name, without the dollar
    loc: Optional[Loc] = _loc_field()


@dataclass(frozen=True)
class Sequence(Expr):
    items: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.items) < 2:
            raise ValueError("sequence needs at least two elements")


@dataclass(frozen=True)
class Selection(Expr):
    alternatives: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.alternatives) < 2:
            raise ValueError("selection needs at least two alternatives")


@dataclass(frozen=True)
class ZeroOrMore(Expr):
    body: Expr


def sequence_of(items: list[Expr]) -> Expr:
    """Build a sequence, collapsing the singleton case."""
    if len(items) == 1:
        return items[0]
    return Sequence(tuple(items))


def selection_of(alts: list[Expr]) -> Expr:
    if len(alts) == 1:
        return alts[0]
    return Selection(tuple(alts))


# ---------------------------------------------------------------------------
# Rules, constraints, grammar
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RuleDef:
    name: str
    body: Expr
    type_tag: Optional[ValueType] = None
    loc: Optional[Loc] = _loc_field()


@dataclass(frozen=True)
class ConstraintExpr:
    expr: BoolExpr
    loc: Optional[Loc] = _loc_field()

    def var_paths(self) -> list[tuple[str, ...]]:
        return expr_vars(self.expr)


@dataclass(frozen=True)
class GrammarAst:
    """A parsed grammar: ordered rules, computed starting rules, constraints."""

    rules: dict[str, RuleDef]
    starting_rules: tuple[str, ...]
    constraints: tuple[ConstraintExpr, ...] = ()

    def rule(self, name: str) -> RuleDef:
        return self.rules[name]

    def __hash__(self):
        return hash((tuple(self.rules), self.starting_rules))


def walk_expr(expr: Expr) -> Iterator[Expr]:
    """Yield `expr` and every node below it, depth-first, in source order."""
    yield expr
    if isinstance(expr, Sequence):
        for item in expr.items:
            yield from walk_expr(item)
    elif isinstance(expr, Selection):
        for alt in expr.alternatives:
            yield from walk_expr(alt)
    elif isinstance(expr, ZeroOrMore):
        yield from walk_expr(expr.body)


def referenced_rules(expr: Expr) -> list[str]:
    """Rule names referenced anywhere under `expr`, in source order."""
    return [node.rule for node in walk_expr(expr) if isinstance(node, Ref)]


def compute_starting_rules(rules: dict[str, RuleDef]) -> tuple[str, ...]:
    """Rules referenced by no other rule (self-references count)."""
    referenced: set[str] = set()
    for rule in rules.values():
        referenced.update(referenced_rules(rule.body))
    return tuple(name for name in rules if name not in referenced)


def grammar_of(rules: dict[str, RuleDef], constraints=()) -> GrammarAst:
    return GrammarAst(
        rules=dict(rules),
        starting_rules=compute_starting_rules(rules),
        constraints=tuple(constraints),
    )
