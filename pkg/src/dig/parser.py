"""Parser for the concrete grammar language.

Surface syntax (normative EBNF also ships in docs/syntax.md):

    grammar     = { rule | constraint } ;
    rule        = name [ ":" type ] "=" expr ;
    type        = "rel" | "int" | "float" | "str" | "date" | "attr" "[" name "]" ;
    constraint  = "constraint" bool-expr EOL ;          (* one line *)
    expr        = seq { "|" seq } ;                     (* ordered choice *)
    seq         = rep { rep } ;                         (* juxtaposition *)
    rep         = primary { "*" } ;                     (* zero-or-more *)
    primary     = literal | regex | domain | ref | "(" expr ")" ;
    literal     = "'" chars "'" ;                       (* \' \\ \n \t \r *)
    regex       = "/" chars "/" ;                       (* \/ for a slash *)
    domain      = "{" ( query | name ":" type [ "|" bool-expr ] ) "}" ;
    query       = text starting with SELECT, up to "}" ;
    ref         = name [ ":$" name ] ;                  (* optional annotation *)
    bool-expr   = or-expr over: and or not, comparisons (= != < <= > >=),
                  "in" "[" values "]", + - * /, numbers, 'strings',
                  true/false, variables ($name or $a/$b in constraints,
                  bare names in domain predicates) ;

Comments run from "#" to end of line.  A rule body ends where the next rule
definition or constraint line begins; "constraint" is a reserved word.  The
word SELECT (any case) right after "{" selects the query-domain reading.

Parsing is pure and deterministic; the same source always yields a
structurally equal AST.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .ast import (
    Arith,
    BoolExpr,
    BoolLit,
    BoolOp,
    Compare,
    ConstraintExpr,
    GrammarAst,
    Literal,
    Loc,
    Membership,
    NotOp,
    Num,
    PredicateDomain,
    QueryDomain,
    Ref,
    RegexTerm,
    RuleDef,
    Selection,
    Sequence,
    StrLit,
    ValueType,
    VarRef,
    ZeroOrMore,
    compute_starting_rules,
    selection_of,
    sequence_of,
)
from .errors import DigSyntaxError, DuplicateRuleError

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?(?:[eE][+-]?\d+)?")
_QUERY_RE = re.compile(r"^\s*select\b", re.IGNORECASE)

RESERVED = {"constraint"}

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", "'": "'"}


@dataclass
class Token:
    kind: str
    value: object
    line: int
    col: int

    def __repr__(self):
        return f"Token({self.kind}, {self.value!r}, {self.line}:{self.col})"


# ---------------------------------------------------------------------------
# Grammar-mode lexer
# ---------------------------------------------------------------------------


class _Lexer:
    def __init__(self, source: str):
        self.src = source
        self.pos = 0
        self.line = 1
        self.col = 1

    def error(self, msg: str, expected: tuple[str, ...] = ()):
        return DigSyntaxError(msg, self.line, self.col, expected)

    def _advance(self, n: int = 1):
        for _ in range(n):
            if self.pos < len(self.src) and self.src[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def _peek(self, offset: int = 0) -> str:
        i = self.pos + offset
        return self.src[i] if i < len(self.src) else ""

    def _skip_space_and_comments(self) -> None:
        while self.pos < len(self.src):
            ch = self.src[self.pos]
            if ch == "#":
                while self.pos < len(self.src) and self.src[self.pos] != "\n":
                    self._advance()
            elif ch.isspace():
                self._advance()
            else:
                return

    def _at_line_start(self) -> bool:
        i = self.pos - 1
        while i >= 0 and self.src[i] in " \t":
            i -= 1
        return i < 0 or self.src[i] == "\n"

    def _quoted(self, close: str, what: str, keep_escapes: bool) -> str:
        # opening delimiter already consumed
        buf: list[str] = []
        while True:
            if self.pos >= len(self.src) or self.src[self.pos] == "\n":
                raise self.error(f"unterminated {what}")
            ch = self.src[self.pos]
            if ch == close:
                self._advance()
                return "".join(buf)
            if ch == "\\":
                nxt = self._peek(1)
                if keep_escapes:
                    # regex: unescape the delimiter only, keep everything else
                    if nxt == close:
                        buf.append(close)
                    else:
                        buf.append(ch)
                        buf.append(nxt)
                else:
                    buf.append(_ESCAPES.get(nxt, nxt))
                self._advance(2)
            else:
                buf.append(ch)
                self._advance()

    def tokens(self) -> list[Token]:
        out: list[Token] = []
        while True:
            self._skip_space_and_comments()
            if self.pos >= len(self.src):
                out.append(Token("EOF", None, self.line, self.col))
                return out
            line, col = self.line, self.col
            ch = self.src[self.pos]
            if ch == "'":
                self._advance()
                out.append(Token("LITERAL", self._quoted("'", "string literal", False), line, col))
            elif ch == "/":
                self._advance()
                out.append(Token("REGEX", self._quoted("/", "regex terminal", True), line, col))
            elif ch == "{":
                self._advance()
                start = self.pos
                while self.pos < len(self.src) and self.src[self.pos] != "}":
                    self._advance()
                if self.pos >= len(self.src):
                    raise DigSyntaxError("unterminated { domain }", line, col)
                raw = self.src[start : self.pos]
                self._advance()
                out.append(Token("BRACE", (raw, Loc(line, col)), line, col))
            elif ch in "=|*()[]:$":
                self._advance()
                kinds = {
                    "=": "EQ", "|": "PIPE", "*": "STAR", "(": "LPAREN", ")": "RPAREN",
                    "[": "LBRACKET", "]": "RBRACKET", ":": "COLON", "$": "DOLLAR",
                }
                out.append(Token(kinds[ch], ch, line, col))
            else:
                m = _IDENT_RE.match(self.src, self.pos)
                if not m:
                    raise self.error(f"unexpected character {ch!r}")
                name = m.group(0)
                if name == "constraint" and self._at_line_start():
                    self._advance(len(name))
                    start = self.pos
                    while self.pos < len(self.src) and self.src[self.pos] != "\n":
                        self._advance()
                    text = self.src[start : self.pos]
                    if "#" in text:
                        text = text[: text.index("#")]
                    out.append(Token("CONSTRAINT", (text, Loc(line, col)), line, col))
                else:
                    self._advance(len(name))
                    out.append(Token("IDENT", name, line, col))


# ---------------------------------------------------------------------------
# Expression lexer and parser (constraints and domain predicates)
# ---------------------------------------------------------------------------

_TWO_CHAR_OPS = ("<=", ">=", "!=")
_ONE_CHAR_OPS = "=<>+-*/()[],|:"


def _lex_expr(text: str, base: Loc) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line, col = base.line, base.col

    def bump(n: int):
        nonlocal pos, line, col
        for _ in range(n):
            if pos < len(text) and text[pos] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            pos += 1

    while pos < len(text):
        ch = text[pos]
        if ch.isspace():
            bump(1)
            continue
        tline, tcol = line, col
        if ch == "'":
            bump(1)
            buf = []
            while pos < len(text) and text[pos] != "'":
                if text[pos] == "\\" and pos + 1 < len(text):
                    buf.append(_ESCAPES.get(text[pos + 1], text[pos + 1]))
                    bump(2)
                else:
                    buf.append(text[pos])
                    bump(1)
            if pos >= len(text):
                raise DigSyntaxError("unterminated string in expression", tline, tcol)
            bump(1)
            tokens.append(Token("STRING", "".join(buf), tline, tcol))
            continue
        if ch == "$":
            bump(1)
            path = []
            m = _IDENT_RE.match(text, pos)
            if not m:
                raise DigSyntaxError("expected a name after $", line, col)
            path.append(m.group(0))
            bump(len(m.group(0)))
            # a qualified path is written without spaces: $a/$b
            while text[pos : pos + 2] == "/$":
                bump(2)
                m = _IDENT_RE.match(text, pos)
                if not m:
                    raise DigSyntaxError("expected a name after /$", line, col)
                path.append(m.group(0))
                bump(len(m.group(0)))
            tokens.append(Token("VARPATH", tuple(path), tline, tcol))
            continue
        if text[pos : pos + 2] in _TWO_CHAR_OPS:
            tokens.append(Token("OP", text[pos : pos + 2], tline, tcol))
            bump(2)
            continue
        if ch in _ONE_CHAR_OPS:
            tokens.append(Token("OP", ch, tline, tcol))
            bump(1)
            continue
        m = _NUMBER_RE.match(text, pos)
        if m:
            raw = m.group(0)
            value = float(raw) if ("." in raw or "e" in raw or "E" in raw) else int(raw)
            tokens.append(Token("NUMBER", value, tline, tcol))
            bump(len(raw))
            continue
        m = _IDENT_RE.match(text, pos)
        if m:
            tokens.append(Token("IDENT", m.group(0), tline, tcol))
            bump(len(m.group(0)))
            continue
        raise DigSyntaxError(f"unexpected character {ch!r} in expression", tline, tcol)
    tokens.append(Token("EOF", None, line, col))
    return tokens


class _ExprParser:
    """Precedence-climbing parser for the predicate/constraint language."""

    def __init__(self, tokens: list[Token], allow_paths: bool):
        self.toks = tokens
        self.i = 0
        self.allow_paths = allow_paths

    def peek(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        tok = self.peek()
        if tok.kind != "OP" or tok.value != op:
            raise DigSyntaxError(f"expected {op!r}", tok.line, tok.col, (repr(op),))
        return self.next()

    def at_op(self, *ops: str) -> bool:
        tok = self.peek()
        return tok.kind == "OP" and tok.value in ops

    def at_word(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "IDENT" and tok.value == word

    def parse(self) -> BoolExpr:
        expr = self.parse_or()
        tok = self.peek()
        if tok.kind != "EOF":
            raise DigSyntaxError(
                f"unexpected {tok.value!r} after expression", tok.line, tok.col
            )
        return expr

    def parse_or(self) -> BoolExpr:
        operands = [self.parse_and()]
        while self.at_word("or"):
            self.next()
            operands.append(self.parse_and())
        return operands[0] if len(operands) == 1 else BoolOp("or", tuple(operands))

    def parse_and(self) -> BoolExpr:
        operands = [self.parse_not()]
        while self.at_word("and"):
            self.next()
            operands.append(self.parse_not())
        return operands[0] if len(operands) == 1 else BoolOp("and", tuple(operands))

    def parse_not(self) -> BoolExpr:
        if self.at_word("not"):
            self.next()
            return NotOp(self.parse_not())
        return self.parse_comparison()

    def parse_comparison(self) -> BoolExpr:
        left = self.parse_sum()
        if self.at_op("=", "!=", "<", "<=", ">", ">="):
            op = self.next().value
            return Compare(str(op), left, self.parse_sum())
        if self.at_word("in"):
            self.next()
            self.expect_op("[")
            values = []
            if not self.at_op("]"):
                values.append(self.parse_sum())
                while self.at_op(","):
                    self.next()
                    values.append(self.parse_sum())
            self.expect_op("]")
            return Membership(left, tuple(values))
        return left

    def parse_sum(self) -> BoolExpr:
        expr = self.parse_product()
        while self.at_op("+", "-"):
            op = self.next().value
            expr = Arith(str(op), expr, self.parse_product())
        return expr

    def parse_product(self) -> BoolExpr:
        expr = self.parse_unary()
        while self.at_op("*", "/"):
            op = self.next().value
            expr = Arith(str(op), expr, self.parse_unary())
        return expr

    def parse_unary(self) -> BoolExpr:
        if self.at_op("-"):
            tok = self.next()
            operand = self.parse_unary()
            if isinstance(operand, Num):
                return Num(-operand.value)
            return Arith("-", Num(0), operand)
        return self.parse_atom()

    def parse_atom(self) -> BoolExpr:
        tok = self.next()
        if tok.kind == "NUMBER":
            return Num(tok.value)
        if tok.kind == "STRING":
            return StrLit(str(tok.value))
        if tok.kind == "VARPATH":
            return VarRef(tuple(tok.value))
        if tok.kind == "IDENT":
            if tok.value == "true":
                return BoolLit(True)
            if tok.value == "false":
                return BoolLit(False)
            return VarRef((str(tok.value),))
        if tok.kind == "OP" and tok.value == "(":
            expr = self.parse_or()
            self.expect_op(")")
            return expr
        raise DigSyntaxError(
            "expected a value or variable", tok.line, tok.col,
            ("number", "string", "variable", "'('"),
        )


def parse_expression(text: str, base: Loc = Loc(1, 1), allow_paths: bool = True) -> BoolExpr:
    """Parse a standalone predicate/constraint expression."""
    return _ExprParser(_lex_expr(text, base), allow_paths).parse()


# ---------------------------------------------------------------------------
# Grammar parser
# ---------------------------------------------------------------------------

_PRIMARY_START = {"LITERAL", "REGEX", "BRACE", "IDENT", "LPAREN"}


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    def peek(self, offset: int = 0) -> Token:
        i = min(self.i + offset, len(self.toks) - 1)
        return self.toks[i]

    def next(self) -> Token:
        tok = self.toks[self.i]
        if tok.kind != "EOF":
            self.i += 1
        return tok

    def expect(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise DigSyntaxError(f"expected {what}", tok.line, tok.col, (what,))
        return self.next()

    # -- statement boundary detection ------------------------------------

    def at_rule_start(self) -> bool:
        """True when the upcoming tokens begin a new rule definition."""
        if self.peek().kind != "IDENT":
            return False
        if self.peek(1).kind == "EQ":
            return True
        if self.peek(1).kind == "COLON" and self.peek(2).kind == "IDENT":
            if self.peek(3).kind == "EQ":
                return True
            # name:attr[param] = ...
            if (
                self.peek(2).value == "attr"
                and self.peek(3).kind == "LBRACKET"
                and self.peek(4).kind == "IDENT"
                and self.peek(5).kind == "RBRACKET"
                and self.peek(6).kind == "EQ"
            ):
                return True
        return False

    # -- rules ------------------------------------------------------------

    def parse_grammar(self) -> GrammarAst:
        rules: dict[str, RuleDef] = {}
        constraints: list[ConstraintExpr] = []
        while self.peek().kind != "EOF":
            tok = self.peek()
            if tok.kind == "CONSTRAINT":
                raw, base = tok.value
                self.next()
                expr = parse_expression(raw, base)
                constraints.append(ConstraintExpr(expr=expr, loc=Loc(tok.line, tok.col)))
                continue
            if not self.at_rule_start():
                raise DigSyntaxError(
                    f"expected a rule definition, got {tok.value!r}",
                    tok.line, tok.col, ("name = expression", "constraint"),
                )
            name_tok = self.next()
            name = str(name_tok.value)
            if name in RESERVED:
                raise DigSyntaxError(f"{name!r} is a reserved word", name_tok.line, name_tok.col)
            type_tag: Optional[ValueType] = None
            if self.peek().kind == "COLON":
                self.next()
                type_tag = self.parse_type_tag()
            self.expect("EQ", "'='")
            body = self.parse_selection()
            if name in rules:
                raise DuplicateRuleError(name, name_tok.line)
            rules[name] = RuleDef(
                name=name, body=body, type_tag=type_tag, loc=Loc(name_tok.line, name_tok.col)
            )
        return GrammarAst(
            rules=rules,
            starting_rules=compute_starting_rules(rules),
            constraints=tuple(constraints),
        )

    def parse_type_tag(self) -> ValueType:
        tok = self.expect("IDENT", "type name")
        name = str(tok.value)
        if name == "attr":
            param = None
            if self.peek().kind == "LBRACKET":
                self.next()
                param = str(self.expect("IDENT", "rule name").value)
                self.expect("RBRACKET", "']'")
            return ValueType("attr", param)
        if name not in ("rel", "int", "float", "str", "date"):
            raise DigSyntaxError(
                f"unknown type {name!r}", tok.line, tok.col,
                ("rel", "attr[rule]", "int", "float", "str", "date"),
            )
        return ValueType(name)

    # -- expressions -------------------------------------------------------

    def parse_selection(self):
        alts = [self.parse_sequence()]
        while self.peek().kind == "PIPE":
            self.next()
            alts.append(self.parse_sequence())
        return selection_of(alts)

    def parse_sequence(self):
        items = [self.parse_postfix()]
        while self.peek().kind in _PRIMARY_START and not self.at_rule_start():
            items.append(self.parse_postfix())
        return sequence_of(items)

    def parse_postfix(self):
        expr = self.parse_primary()
        while self.peek().kind == "STAR":
            self.next()
            expr = ZeroOrMore(expr)
        return expr

    def parse_primary(self):
        tok = self.peek()
        if tok.kind == "LITERAL":
            self.next()
            return Literal(str(tok.value), loc=Loc(tok.line, tok.col))
        if tok.kind == "REGEX":
            self.next()
            pattern = str(tok.value)
            try:
                re.compile(pattern)
            except re.error as exc:
                raise DigSyntaxError(f"bad regex: {exc}", tok.line, tok.col) from None
            return RegexTerm(pattern, loc=Loc(tok.line, tok.col))
        if tok.kind == "BRACE":
            self.next()
            raw, base = tok.value
            return self.parse_domain(str(raw), base)
        if tok.kind == "IDENT":
            self.next()
            name = str(tok.value)
            if name in RESERVED:
                raise DigSyntaxError(f"{name!r} is a reserved word", tok.line, tok.col)
            annotation = None
            if self.peek().kind == "COLON" and self.peek(1).kind == "DOLLAR":
                self.next()
                self.next()
                ann_tok = self.expect("IDENT", "annotation name")
                annotation = str(ann_tok.value)
            return Ref(name, annotation, loc=Loc(tok.line, tok.col))
        if tok.kind == "LPAREN":
            self.next()
            expr = self.parse_selection()
            self.expect("RPAREN", "')'")
            return expr
        raise DigSyntaxError(
            f"expected an expression, got {tok.value!r}", tok.line, tok.col,
            ("literal", "regex", "{ domain }", "rule reference", "'('"),
        )

    def parse_domain(self, raw: str, base: Loc):
        if _QUERY_RE.match(raw):
            return QueryDomain(raw.strip(), loc=base)
        toks = _lex_expr(raw, base)
        p = _ExprParser(toks, allow_paths=False)
        var_tok = p.next()
        if var_tok.kind != "IDENT":
            raise DigSyntaxError(
                "expected 'var:type' or a SELECT query inside { }", var_tok.line, var_tok.col,
                ("name", "SELECT"),
            )
        colon = p.next()
        if not (colon.kind == "OP" and colon.value == ":"):
            raise DigSyntaxError("expected ':' after the domain variable", colon.line, colon.col)
        type_tok = p.next()
        if type_tok.kind != "IDENT":
            raise DigSyntaxError("expected a type name", type_tok.line, type_tok.col)
        type_name = str(type_tok.value)
        param = None
        if type_name == "attr" and p.at_op("["):
            p.next()
            param_tok = p.next()
            if param_tok.kind != "IDENT":
                raise DigSyntaxError("expected a rule name", param_tok.line, param_tok.col)
            param = str(param_tok.value)
            p.expect_op("]")
        if type_name not in ("int", "float", "str", "date", "rel", "attr"):
            raise DigSyntaxError(
                f"unknown domain type {type_name!r}", type_tok.line, type_tok.col,
                ("int", "float", "str", "date", "rel", "attr[rule]"),
            )
        predicate: Optional[BoolExpr] = None
        if p.at_op("|"):
            p.next()
            predicate = p.parse_or()
            tail = p.peek()
            if tail.kind != "EOF":
                raise DigSyntaxError(
                    f"unexpected {tail.value!r} in predicate", tail.line, tail.col
                )
        else:
            tail = p.peek()
            if tail.kind != "EOF":
                raise DigSyntaxError(
                    "expected '|' and a predicate, or '}'", tail.line, tail.col, ("'|'",)
                )
        return PredicateDomain(
            var=str(var_tok.value),
            base_type=ValueType(type_name, param),
            predicate=predicate,
            loc=base,
        )


def parse_grammar(source: str) -> GrammarAst:
    """Parse grammar source text into a GrammarAst.

    Raises DigSyntaxError (with line/col and the expected-token set) on
    malformed input and DuplicateRuleError when a rule is defined twice.
    References to undefined rules are a validation finding, not a parse
    error.
    """
    tokens = _Lexer(source).tokens()
    return _Parser(tokens).parse_grammar()
