"""Query-space enumeration tests."""

import time

import pytest

from dig.choices import ChoiceModel
from dig.enumeration import enumerate_queries
from dig.errors import BackendUnavailableError, InfiniteDomainError
from dig.parser import parse_grammar


class TestCounts:
    def test_fig1_is_1332_under_a_second(self, fig1_model):
        started = time.monotonic()
        result = enumerate_queries(fig1_model)
        elapsed = time.monotonic() - started
        assert result.count == 1332
        assert elapsed < 1.0

    def test_fig1_decomposition(self, fig1_model):
        # 2 table choices x 666 ordered (s, e) pairs over [1, 36]
        queries = enumerate_queries(fig1_model).rule_queries("q")
        chirps = [q for q in queries if " FROM chirps " in q]
        evi = [q for q in queries if " FROM evi " in q]
        assert len(chirps) == len(evi) == 666

    def test_fig4a_is_4(self, fig4a_ast):
        result = enumerate_queries(ChoiceModel(fig4a_ast))
        assert result.count == 4

    def test_single_literal_is_1(self):
        result = enumerate_queries(ChoiceModel(parse_grammar("q = 'SELECT 1'")))
        assert result.count == 1
        assert result.queries == ["SELECT 1"]

    def test_distinct_strings_deduped(self):
        ast = parse_grammar("q = 'x' | 'x' | 'y'")
        assert enumerate_queries(ChoiceModel(ast)).count == 2

    def test_constraint_filtering(self):
        ast = parse_grammar(
            "q = a:$x '-' a:$y\na = { n:int | n >= 1 and n <= 3 }\nconstraint $x < $y"
        )
        result = enumerate_queries(ChoiceModel(ast))
        assert sorted(result.queries) == ["1-2", "1-3", "2-3"]

    def test_equality_classes_filter_combinations(self):
        ast = parse_grammar("q = b:$v ' ' b:$v\nb = { n:int | n >= 1 and n <= 3 }")
        result = enumerate_queries(ChoiceModel(ast))
        assert sorted(result.queries) == ["1 1", "2 2", "3 3"]

    def test_multi_root_counts_sum(self, crossfilter_model, backend):
        result = enumerate_queries(crossfilter_model, backend, star_max=2)
        assert set(result.per_rule) == {"q1_bg", "q2_bg", "q1", "q2"}
        assert result.per_rule["q1_bg"][0] == 1
        assert result.count == sum(c for c, _ in result.per_rule.values())

    def test_star_expansion(self):
        ast = parse_grammar("q = 'x' ('!' )*")
        result = enumerate_queries(ChoiceModel(ast), star_max=3)
        assert sorted(result.queries) == ["x", "x!", "x!!", "x!!!"]


class TestErrors:
    def test_open_str_domain_is_infinite(self):
        ast = parse_grammar("q = { s:str | true }")
        with pytest.raises(InfiniteDomainError):
            enumerate_queries(ChoiceModel(ast))

    def test_regex_terminal_is_infinite(self):
        ast = parse_grammar(r"q = /\d+/")
        with pytest.raises(InfiniteDomainError):
            enumerate_queries(ChoiceModel(ast))

    def test_unbounded_int_is_infinite(self):
        ast = parse_grammar("q = { n:int | n > 0 }")
        with pytest.raises(InfiniteDomainError):
            enumerate_queries(ChoiceModel(ast))

    def test_query_domain_needs_backend(self):
        ast = parse_grammar("q = { SELECT name FROM products }")
        with pytest.raises(BackendUnavailableError):
            enumerate_queries(ChoiceModel(ast))

    def test_query_domain_with_backend(self, backend):
        ast = parse_grammar("q = { SELECT name FROM products }")
        result = enumerate_queries(ChoiceModel(ast), backend)
        assert sorted(result.queries) == ["gadget", "widget"]


class TestCap:
    def test_cap_suppresses_list_not_count(self, fig1_model):
        result = enumerate_queries(fig1_model, cap=10)
        assert result.count == 1332
        assert result.rule_queries("q") is None
        assert result.queries is None

    def test_cap_boundary(self, fig1_model):
        result = enumerate_queries(fig1_model, cap=1332)
        assert len(result.rule_queries("q")) == 1332
