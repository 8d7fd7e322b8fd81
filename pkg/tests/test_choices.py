"""Choice-model tests: extraction, naming, equality classes, dependencies."""

import random

import pytest

from conftest import CROSSFILTER, random_grammar
from dig.ast import (
    PredicateDomain,
    QueryDomain,
    RegexTerm,
    Selection,
    ZeroOrMore,
    walk_expr,
)
from dig.choices import (
    ChoiceModel,
    EnumeratedInts,
    PredicateDom,
    QualifiedName,
    build_constraint_graph,
    dependency_order,
    extract_choice_variables,
    resolve_path,
)
from dig.errors import RecursionUnboundedError, UnresolvedConstraintVariableError
from dig.parser import parse_grammar


def names(variables):
    return [str(v.qname) for v in variables]


class TestExtraction:
    def test_fig1_variables(self, fig1_ast):
        variables = extract_choice_variables(fig1_ast)
        assert names(variables) == ["t", "s", "e"]
        t, s, e = variables
        assert t.kind == "selection" and t.domain == EnumeratedInts(1, 2)
        assert s.kind == "predicate-domain" and s.domain.base_type.name == "int"
        assert e.kind == "predicate-domain"

    def test_qualified_path_disambiguation(self):
        ast = parse_grammar("A = B:$v1 B:$v2\nB = C:$v3\nC = /\\d+/")
        assert names(extract_choice_variables(ast)) == ["v1/v3", "v2/v3"]

    def test_single_literal_grammar_has_no_variables(self):
        assert extract_choice_variables(parse_grammar("q = 'SELECT 1'")) == []

    def test_auto_naming_ordinals(self):
        ast = parse_grammar("q = v ' ' v\nv = /\\d+/")
        assert names(extract_choice_variables(ast)) == ["v1", "v2"]

    def test_unique_reference_keeps_bare_name(self, fig1_ast):
        assert "t" in names(extract_choice_variables(fig1_ast))

    def test_multi_root_paths_include_root(self, crossfilter_ast):
        variables = extract_choice_variables(crossfilter_ast)
        assert names(variables) == [
            "q1/pair", "q1/pair/airs", "q1/pair/aire",
            "q1/pd", "q1/pd/s", "q1/pd/e",
            "q2/parr", "q2/parr/arrs", "q2/parr/arre",
            "q2/pd", "q2/pd/s", "q2/pd/e",
        ]

    def test_inline_sites_get_synthesized_names(self):
        ast = parse_grammar("q = 'a' ('x' | 'y') /\\d/* 'b'")
        variables = extract_choice_variables(ast)
        assert names(variables) == ["sel1", "rep1", "rep1/dom1"]

    def test_recursion_strict_raises(self, querybuilder_ast):
        with pytest.raises(RecursionUnboundedError):
            extract_choice_variables(querybuilder_ast)

    def test_recursion_summary_cuts_cycles(self, querybuilder_ast):
        variables = extract_choice_variables(querybuilder_ast, recursion="summary")
        assert "src" in names(variables)
        assert "src/table" in names(variables)
        assert all(not n.startswith("src/src") for n in names(variables))

    def test_completeness_against_independent_walk(self):
        # site/path pairs counted by a direct AST walk must equal the
        # extractor's output on acyclic grammars
        rng = random.Random(13)
        for _ in range(60):
            ast = random_grammar(rng)
            expected = _count_site_paths(ast)
            got = len(extract_choice_variables(ast))
            assert got == expected

    def test_determinism(self, crossfilter_ast):
        first = extract_choice_variables(crossfilter_ast)
        second = extract_choice_variables(parse_grammar(CROSSFILTER))
        assert names(first) == names(second)

    def test_order_matches_ast_position(self, fig1_ast):
        variables = extract_choice_variables(fig1_ast)
        assert names(variables) == ["t", "s", "e"]


def _count_site_paths(ast) -> int:
    """Brute-force (path, site) counting, independent of the extractor."""
    counts = [0]

    def visit_rule(rule_name, depth):
        body = ast.rules[rule_name].body
        visit(body, depth, True)

    def visit(expr, depth, at_root):
        if isinstance(expr, (Selection, ZeroOrMore, PredicateDomain,
                             QueryDomain, RegexTerm)):
            counts[0] += 1
        if isinstance(expr, Selection):
            for alt in expr.alternatives:
                visit(alt, depth, False)
        elif isinstance(expr, ZeroOrMore):
            visit(expr.body, depth, False)
        else:
            from dig.ast import Ref, Sequence

            if isinstance(expr, Sequence):
                for item in expr.items:
                    visit(item, depth, False)
            elif isinstance(expr, Ref) and expr.rule in ast.rules:
                visit_rule(expr.rule, depth + 1)

    for root in ast.starting_rules:
        visit_rule(root, 0)
    return counts[0]


class TestConstraintGraph:
    def test_crossfilter_equality_classes(self, crossfilter_ast):
        graph = build_constraint_graph(crossfilter_ast)
        classes = {frozenset(str(q) for q in cls) for cls in graph.equality_classes}
        assert classes == {
            frozenset({"q1/pd", "q2/pd"}),
            frozenset({"q1/pd/s", "q2/pd/s"}),
            frozenset({"q1/pd/e", "q2/pd/e"}),
        }

    def test_fig1_no_classes_one_constraint(self, fig1_ast):
        graph = build_constraint_graph(fig1_ast)
        assert graph.equality_classes == []
        assert len(graph.general_constraints) == 1
        resolved = graph.general_constraints[0].bindings
        assert {p for p in resolved} == {("s",), ("e",)}

    def test_no_annotations_no_constraints(self):
        graph = build_constraint_graph(parse_grammar("q = 'a' | 'b'"))
        assert graph.equality_classes == []
        assert graph.general_constraints == []

    def test_single_site_multiple_paths_not_merged(self):
        # v1/v3 and v2/v3 share one annotated site: no equality implied
        ast = parse_grammar("A = B:$v1 B:$v2\nB = C:$v3\nC = /\\d+/")
        graph = build_constraint_graph(ast)
        assert graph.equality_classes == []

    def test_unresolved_constraint_variable(self):
        ast = parse_grammar("q = val:$s\nval = { x:int | x >= 1 }\nconstraint $s <= $e")
        with pytest.raises(UnresolvedConstraintVariableError):
            build_constraint_graph(ast)

    def test_suffix_resolution_to_equality_class(self, crossfilter_model):
        from dig.choices import resolve_constraint_path

        resolved = resolve_constraint_path(
            ("s",), crossfilter_model.variables, crossfilter_model.classes
        )
        assert {str(q) for q in resolved} == {"q1/pd/s", "q2/pd/s"}


class TestDependencyOrder:
    def test_fig1_order_is_empty(self, fig1_ast):
        assert dependency_order(fig1_ast).pairs() == []

    def test_selection_precedes_nested_variable(self):
        ast = parse_grammar("A = ('x' | B)\nB = { n:int | n > 0 }")
        order = dependency_order(ast)
        [(child, parent)] = order.pairs()
        assert (str(parent), str(child)) == ("A", "A/B")
        assert order.precedes(QualifiedName.parse("A"), QualifiedName.parse("A/B"))

    def test_querybuilder_src_gates_branch_variables(self, querybuilder_ast):
        order = dependency_order(querybuilder_ast, recursion="summary")
        src = QualifiedName.parse("src")
        table = QualifiedName.parse("src/table")
        assert order.precedes(src, table)

    def test_against_brute_force_reachability(self):
        # parent relation == deepest selection/star whose qname prefixes the
        # variable, computed here from scratch over prefix arithmetic
        rng = random.Random(99)
        for _ in range(60):
            ast = random_grammar(rng)
            variables = extract_choice_variables(ast)
            order = dependency_order(ast)
            gates = {v.qname for v in variables if v.kind in ("selection", "star")}
            for v in variables:
                prefixes = [
                    g for g in gates
                    if g != v.qname and g.path == v.qname.path[: len(g.path)]
                ]
                expected = max(prefixes, key=lambda g: len(g.path), default=None)
                assert order.parent(v.qname) == expected


class TestResolvePath:
    def test_static_paths(self, fig1_ast):
        cv = resolve_path(fig1_ast, QualifiedName.parse("s"))
        assert cv.kind == "predicate-domain"

    def test_star_instance_paths(self, querybuilder_ast):
        cv = resolve_path(querybuilder_ast, QualifiedName.parse("preds/rep1/3/pred2/op"))
        assert cv.kind == "selection"

    def test_recursive_paths(self, querybuilder_ast):
        cv = resolve_path(querybuilder_ast, QualifiedName.parse("src/src/table"))
        assert cv.kind == "predicate-domain"
        assert cv.domain.base_type.name == "rel"

    def test_unknown_path(self, fig1_ast):
        from dig.errors import UnknownVariableError

        with pytest.raises(UnknownVariableError):
            resolve_path(fig1_ast, QualifiedName.parse("nope"))


class TestChoiceModel:
    def test_lookup_by_suffix(self, crossfilter_model):
        assert str(crossfilter_model.lookup("arrs").qname) == "q2/parr/arrs"

    def test_lookup_ambiguous_raises(self, crossfilter_model):
        from dig.errors import UnknownVariableError

        with pytest.raises(UnknownVariableError):
            crossfilter_model.lookup("s")
