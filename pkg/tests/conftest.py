"""Shared fixtures: paper grammars, in-memory datasets, random generators."""

from __future__ import annotations

import random

import pytest

from dig import fixtures
from dig.ast import (
    GrammarAst,
    Literal,
    PredicateDomain,
    Ref,
    RuleDef,
    Selection,
    Sequence,
    ValueType,
    ZeroOrMore,
    compute_starting_rules,
)
from dig.choices import ChoiceModel
from dig.parser import parse_expression, parse_grammar

FIG1 = fixtures.grammar_text("drought")
FIG1_LIVE = fixtures.grammar_text("drought_live")
CROSSFILTER = fixtures.grammar_text("crossfilter")
QUERYBUILDER = fixtures.grammar_text("querybuilder")
FIG4A = fixtures.grammar_text("fig4a")
PRODUCTS = fixtures.grammar_text("products")

FIG1_END_QUERY = "SELECT year, payout1(*), ... FROM evi WHERE dekad BETWEEN 1 AND 2"


@pytest.fixture(scope="session")
def fig1_ast():
    return parse_grammar(FIG1)


@pytest.fixture(scope="session")
def fig1_model(fig1_ast):
    return ChoiceModel(fig1_ast)


@pytest.fixture(scope="session")
def crossfilter_ast():
    return parse_grammar(CROSSFILTER)


@pytest.fixture(scope="session")
def crossfilter_model(crossfilter_ast):
    return ChoiceModel(crossfilter_ast)


@pytest.fixture(scope="session")
def querybuilder_ast():
    return parse_grammar(QUERYBUILDER)


@pytest.fixture(scope="session")
def fig4a_ast():
    return parse_grammar(FIG4A)


@pytest.fixture(scope="session")
def backend():
    be = fixtures.fixture_backend()
    yield be
    be.close()


# ---------------------------------------------------------------------------
# Random grammar generation (seeded; used by the property tests)
# ---------------------------------------------------------------------------

_WORDS = ["sel", "sum", "avg", "name", "total", "from_t", "by_day", "x", "y"]
_LITS = ["SELECT ", " FROM t", " WHERE ", "a = ", "b < ", " AND ", "1", "2", "07"]


def random_literal_selection_grammar(rng: random.Random) -> GrammarAst:
    """Selections over literal strings, half of them built as cross products."""
    alphabet = "ab=12xy:"
    rules: dict[str, RuleDef] = {}
    n_choice_rules = rng.randint(1, 3)
    parts = [Literal("Q" + str(rng.randint(0, 9)) + " ")]
    for i in range(n_choice_rules):
        name = f"c{i}"
        if rng.random() < 0.5:
            lefts = {"".join(rng.choices(alphabet, k=rng.randint(1, 2)))
                     for _ in range(rng.randint(2, 3))}
            rights = {"".join(rng.choices(alphabet, k=rng.randint(1, 2)))
                      for _ in range(rng.randint(2, 3))}
            sep = rng.choice(["=", "<", " in "])
            alts = [Literal(l + sep + r) for l in sorted(lefts) for r in sorted(rights)]
        else:
            texts = {"".join(rng.choices(alphabet, k=rng.randint(1, 4)))
                     for _ in range(rng.randint(2, 5))}
            alts = [Literal(t) for t in sorted(texts)]
        if len(alts) < 2:
            alts.append(Literal(alts[0].text + "z"))
        rules[name] = RuleDef(name=name, body=Selection(tuple(alts)))
        parts.append(Ref(name))
        parts.append(Literal(rng.choice([" ", " AND ", "; "])))
    body = Sequence(tuple(parts)) if len(parts) > 1 else parts[0]
    rules["root"] = RuleDef(name="root", body=body)
    rules = {"root": rules["root"], **{k: v for k, v in rules.items() if k != "root"}}
    return GrammarAst(rules=rules, starting_rules=compute_starting_rules(rules))


def random_grammar(rng: random.Random) -> GrammarAst:
    """A small random well-formed grammar with mixed expression kinds."""
    rules: dict[str, RuleDef] = {}
    helper_names: list[str] = []
    n_helpers = rng.randint(0, 3)
    for i in range(n_helpers):
        name = f"r{i}"
        helper_names.append(name)
        rules[name] = RuleDef(name=name, body=_random_expr(rng, helper_names[:-1], 2))
    root_parts = [Literal(rng.choice(_LITS))]
    for name in helper_names:
        if rng.random() < 0.8:
            root_parts.append(Ref(name))
            root_parts.append(Literal(rng.choice(_LITS)))
    if len(root_parts) == 1:
        root_parts.append(_random_expr(rng, helper_names, 1))
    body = Sequence(tuple(root_parts)) if len(root_parts) > 1 else root_parts[0]
    rules["q"] = RuleDef(name="q", body=body)
    ordered = {"q": rules["q"], **{k: v for k, v in rules.items() if k != "q"}}
    return GrammarAst(rules=ordered, starting_rules=compute_starting_rules(ordered))


def random_separated_grammar(rng: random.Random) -> GrammarAst:
    """Random grammar in the realistic shape: domain terminals and
    repetitions always separated by distinctive literals (as every grammar
    in the fixture corpus is), so greedy PEG matching and the enumerated
    language agree."""
    seps = iter([" :: ", " & ", " / ", " => ", " .. ", " ;; "])
    rules: dict[str, RuleDef] = {}
    parts: list = [Literal(rng.choice(["Q ", "GET ", "RUN "]))]
    n = rng.randint(1, 3)
    for i in range(n):
        kind = rng.choice(["int", "sel", "star", "enum"])
        name = f"r{i}"
        if kind == "int":
            lo = rng.randint(0, 4)
            hi = lo + rng.randint(1, 5)
            body = PredicateDomain(
                "x", ValueType("int"),
                parse_expression(f"x >= {lo} and x <= {hi}", allow_paths=False),
            )
        elif kind == "sel":
            words = rng.sample(["alpha", "beta", "gamma", "delta"], k=rng.randint(2, 3))
            body = Selection(tuple(Literal(w) for w in words))
        elif kind == "enum":
            values = rng.sample(["red", "green", "blue"], k=2)
            quoted = ", ".join(f"'{v}'" for v in values)
            body = PredicateDomain(
                "s", ValueType("str"),
                parse_expression(f"s in [{quoted}]", allow_paths=False),
            )
        else:
            inner = PredicateDomain(
                "x", ValueType("int"),
                parse_expression("x >= 0 and x <= 2", allow_paths=False),
            )
            body = Sequence((Literal("["), ZeroOrMore(Sequence((inner, Literal("]["))))))
        rules[name] = RuleDef(name=name, body=body)
        parts.append(Ref(name))
        parts.append(Literal(next(seps)))
    rules["q"] = RuleDef(name="q", body=Sequence(tuple(parts)))
    ordered = {"q": rules.pop("q"), **rules}
    return GrammarAst(rules=ordered, starting_rules=compute_starting_rules(ordered))


def _random_expr(rng: random.Random, refs: list[str], depth: int):
    kinds = ["literal", "int-domain"]
    if depth > 0:
        kinds += ["selection", "sequence", "star"]
    if refs:
        kinds.append("ref")
    kind = rng.choice(kinds)
    if kind == "literal":
        return Literal(rng.choice(_LITS))
    if kind == "int-domain":
        lo = rng.randint(0, 5)
        hi = lo + rng.randint(0, 6)
        return PredicateDomain(
            "x", ValueType("int"), parse_expression(f"x >= {lo} and x <= {hi}",
                                                    allow_paths=False),
        )
    if kind == "ref":
        return Ref(rng.choice(refs))
    if kind == "selection":
        n = rng.randint(2, 4)
        return Selection(tuple(_random_expr(rng, refs, depth - 1) for _ in range(n)))
    if kind == "sequence":
        n = rng.randint(2, 3)
        return Sequence(tuple(_random_expr(rng, refs, depth - 1) for _ in range(n)))
    return ZeroOrMore(_random_expr(rng, refs, 0))
