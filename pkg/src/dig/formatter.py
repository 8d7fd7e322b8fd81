"""Pretty-printer: the inverse of the parser.

format_grammar(ast) produces source text that reparses to a structurally
equal AST (locations excluded from comparison).
"""

from __future__ import annotations

from .ast import (
    Arith,
    BoolExpr,
    BoolLit,
    BoolOp,
    Compare,
    ConstraintExpr,
    Expr,
    GrammarAst,
    Literal,
    Membership,
    NotOp,
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


def _quote_literal(text: str) -> str:
    out = text.replace("\\", "\\\\").replace("'", "\\'")
    out = out.replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")
    return f"'{out}'"


def _quote_regex(pattern: str) -> str:
    return "/" + pattern.replace("/", "\\/") + "/"


# expression precedence levels, loosest first
_PREC_OR, _PREC_AND, _PREC_NOT, _PREC_CMP, _PREC_ADD, _PREC_MUL, _PREC_ATOM = range(7)


def format_bool_expr(node: BoolExpr, qualified: bool = True) -> str:
    """Render a predicate/constraint expression.

    With `qualified` the variables print as $a/$b paths (constraint form);
    without, as bare names (domain-predicate form).
    """
    text, _ = _fmt_expr(node, qualified)
    return text


def _fmt_expr(node: BoolExpr, qualified: bool) -> tuple[str, int]:
    def child(n: BoolExpr, parent_prec: int) -> str:
        text, prec = _fmt_expr(n, qualified)
        return f"({text})" if prec < parent_prec else text

    if isinstance(node, Num):
        if node.value < 0:
            return f"-{-node.value}", _PREC_ATOM
        return str(node.value), _PREC_ATOM
    if isinstance(node, StrLit):
        return _quote_literal(node.value), _PREC_ATOM
    if isinstance(node, BoolLit):
        return ("true" if node.value else "false"), _PREC_ATOM
    if isinstance(node, VarRef):
        if qualified:
            return "/".join(f"${part}" for part in node.path), _PREC_ATOM
        return "/".join(node.path), _PREC_ATOM
    if isinstance(node, BoolOp):
        prec = _PREC_OR if node.op == "or" else _PREC_AND
        parts = [child(op, prec + 1) for op in node.operands]
        return f" {node.op} ".join(parts), prec
    if isinstance(node, NotOp):
        return f"not {child(node.operand, _PREC_NOT)}", _PREC_NOT
    if isinstance(node, Compare):
        left = child(node.left, _PREC_CMP + 1)
        right = child(node.right, _PREC_CMP + 1)
        return f"{left} {node.op} {right}", _PREC_CMP
    if isinstance(node, Membership):
        item = child(node.item, _PREC_CMP + 1)
        values = ", ".join(child(v, _PREC_CMP + 1) for v in node.values)
        return f"{item} in [{values}]", _PREC_CMP
    if isinstance(node, Arith):
        prec = _PREC_ADD if node.op in "+-" else _PREC_MUL
        left = child(node.left, prec)
        right = child(node.right, prec + 1)  # left-associative
        return f"{left} {node.op} {right}", prec
    raise TypeError(f"not an expression node: {node!r}")


# parsing-expression precedence: selection < sequence < postfix star
_E_SEL, _E_SEQ, _E_POST = range(3)


def _fmt_parse_expr(expr: Expr) -> tuple[str, int]:
    def child(e: Expr, min_prec: int) -> str:
        text, prec = _fmt_parse_expr(e)
        return f"({text})" if prec < min_prec else text

    if isinstance(expr, Literal):
        return _quote_literal(expr.text), _E_POST
    if isinstance(expr, RegexTerm):
        return _quote_regex(expr.pattern), _E_POST
    if isinstance(expr, QueryDomain):
        return "{ " + expr.query + " }", _E_POST
    if isinstance(expr, PredicateDomain):
        inner = f"{expr.var}:{expr.base_type}"
        if expr.predicate is not None:
            inner += " | " + format_bool_expr(expr.predicate, qualified=False)
        return "{ " + inner + " }", _E_POST
    if isinstance(expr, Ref):
        if expr.annotation:
            return f"{expr.rule}:${expr.annotation}", _E_POST
        return expr.rule, _E_POST
    if isinstance(expr, Sequence):
        # nested sequences keep their parens so grouping survives a roundtrip
        return " ".join(child(item, _E_SEQ + (isinstance(item, Sequence))) for item in expr.items), _E_SEQ
    if isinstance(expr, Selection):
        return " | ".join(child(alt, _E_SEQ) for alt in expr.alternatives), _E_SEL
    if isinstance(expr, ZeroOrMore):
        return child(expr.body, _E_POST) + "*", _E_POST
    raise TypeError(f"not a parsing expression: {expr!r}")


def format_expr(expr: Expr) -> str:
    return _fmt_parse_expr(expr)[0]


def format_constraint(constraint: ConstraintExpr) -> str:
    return "constraint " + format_bool_expr(constraint.expr, qualified=True)


def format_grammar(ast: GrammarAst) -> str:
    """Render a grammar back to source text (one rule per line)."""
    lines = []
    for rule in ast.rules.values():
        head = rule.name if rule.type_tag is None else f"{rule.name}:{rule.type_tag}"
        lines.append(f"{head} = {format_expr(rule.body)}")
    for constraint in ast.constraints:
        lines.append(format_constraint(constraint))
    return "\n".join(lines) + "\n"
