"""Templated-model translation tests."""

import pytest

from dig import fixtures
from dig.ast import Literal, PredicateDomain, Ref, Selection, Sequence
from dig.binding import BindingState
from dig.choices import ChoiceModel
from dig.dbt import (
    ProjectGraph,
    TemplatedModel,
    VarDecl,
    assignments_over_domains,
    expand_template,
    load_project,
    translate_model,
    translate_project,
    used_variables,
)
from dig.errors import CyclicRefError, UnknownDirectiveError, UnresolvedRefError
from dig.reduction import reduce_rule_strict
from dig.validate import validate_grammar


@pytest.fixture(scope="module")
def profit_project():
    return load_project(fixtures.dbt_project_dir())


class TestTranslateModel:
    def test_profit_model_shape(self, profit_project):
        rules = translate_model(profit_project.models["q"], profit_project)
        q = rules["q"].body
        assert isinstance(q, Sequence)
        assert q.items[0] == Literal("SELECT cty, sum(profit) FROM ")
        assert isinstance(q.items[1], Ref) and q.items[1].rule == "region"
        assert q.items[2] == Literal(" WHERE age > ")
        assert isinstance(q.items[3], Ref) and q.items[3].rule == "age"
        region = rules["region"].body
        assert isinstance(region, Selection)
        assert [a.rule for a in region.alternatives] == ["usa", "eur"]
        age = rules["age"].body
        assert isinstance(age, PredicateDomain)
        assert age.base_type.name == "int"

    def test_model_without_directives_is_one_literal(self):
        project = ProjectGraph(models={"m": TemplatedModel("m", "SELECT 1")})
        rules = translate_model(project.models["m"], project)
        assert rules["m"].body == Literal("SELECT 1")

    def test_base_relation_rule(self, profit_project):
        rules = translate_model(profit_project.models["usa"], profit_project)
        rel = rules["us_customers"]
        assert rel.type_tag is not None and rel.type_tag.name == "rel"
        assert rel.body == Literal("us_customers")

    def test_predicate_var_domain(self):
        project = ProjectGraph(
            models={"m": TemplatedModel("m", 'X {{var("age")}}')},
            vars={"age": VarDecl("age", type="int", predicate="n > 0")},
        )
        rules = translate_model(project.models["m"], project)
        dom = rules["age"].body
        assert isinstance(dom, PredicateDomain)
        model = ChoiceModel(translate_project(project))
        state = BindingState(model)
        state.bind("age", 5)
        from dig.errors import DomainError

        with pytest.raises(DomainError):
            state.bind("age", 0)

    def test_undeclared_var_warns_and_is_open_string(self):
        project = ProjectGraph(models={"m": TemplatedModel("m", 'X {{var("who")}}')})
        with pytest.warns(UserWarning):
            rules = translate_model(project.models["m"], project)
        dom = rules["who"].body
        assert isinstance(dom, PredicateDomain) and dom.base_type.name == "str"

    def test_ref_var_requires_enumerated_domain(self):
        project = ProjectGraph(
            models={"m": TemplatedModel("m", 'FROM {{ref(var("x"))}}')},
            vars={"x": VarDecl("x", type="str")},
        )
        with pytest.raises(UnresolvedRefError):
            translate_model(project.models["m"], project)

    def test_unknown_directive(self):
        with pytest.raises(UnknownDirectiveError):
            TemplatedModel("m", "SELECT {{macro_call()}}")

    def test_branching_becomes_selection(self):
        source = (
            "SELECT * FROM t WHERE "
            '{% if var("lvl") = 1 %}a > 1{% elif var("lvl") = 2 %}b > 2'
            "{% else %}c > 3{% endif %}"
        )
        project = ProjectGraph(
            models={"m": TemplatedModel("m", source)},
            vars={"lvl": VarDecl("lvl", type="int", min=1, max=3)},
        )
        rules = translate_model(project.models["m"], project)
        body = rules["m"].body
        branch = body.items[-1]
        assert isinstance(branch, Selection)
        assert len(branch.alternatives) == 3

    def test_double_equals_accepted(self):
        source = '{% if var("x") == 1 %}one{% else %}other{% endif %}'
        project = ProjectGraph(
            models={"m": TemplatedModel("m", source)},
            vars={"x": VarDecl("x", type="int", min=1, max=2)},
        )
        rules = translate_model(project.models["m"], project)
        assert isinstance(rules["m"].body, Selection)


class TestTranslateProject:
    def test_profit_project_starting_rule(self, profit_project):
        ast = translate_project(profit_project)
        assert ast.starting_rules == ("q",)
        assert validate_grammar(ast).ok()

    def test_single_model_project(self):
        project = ProjectGraph(models={"only": TemplatedModel("only", "SELECT 1")})
        ast = translate_project(project)
        assert ast.starting_rules == ("only",)

    def test_two_roots(self):
        project = ProjectGraph(models={
            "a": TemplatedModel("a", "SELECT 1"),
            "b": TemplatedModel("b", "SELECT 2"),
        })
        ast = translate_project(project)
        assert set(ast.starting_rules) == {"a", "b"}

    def test_cycle_detected(self):
        project = ProjectGraph(models={
            "a": TemplatedModel("a", 'X {{ref("b")}}'),
            "b": TemplatedModel("b", 'Y {{ref("a")}}'),
        })
        with pytest.raises(CyclicRefError):
            translate_project(project)

    def test_chained_refs(self):
        project = ProjectGraph(models={
            "a": TemplatedModel("a", 'A({{ref("b")}})'),
            "b": TemplatedModel("b", 'B({{ref("c")}})'),
            "c": TemplatedModel("c", "C"),
        })
        ast = translate_project(project)
        assert ast.starting_rules == ("a",)
        model = ChoiceModel(ast)
        state = BindingState(model)
        assert reduce_rule_strict(model, state, "a") == "A(B(C))"
        # oracle: template expansion agrees
        assert expand_template(project, "a", {}) == "A(B(C))"


class TestExpansionEquivalence:
    def test_paper_binding(self, profit_project):
        ast = translate_project(profit_project)
        model = ChoiceModel(ast)
        state = BindingState(model)
        state.bind("region", 1)  # usa
        state.bind("age", 30)
        reduced = reduce_rule_strict(model, state, "q")
        assert reduced == (
            "SELECT cty, sum(profit) FROM SELECT cty, profit, age FROM us_customers"
            " WHERE age > 30"
        )
        assert reduced == expand_template(profit_project, "q",
                                          {"region": "usa", "age": 30})

    def test_exhaustive_over_declared_domains(self, profit_project):
        ast = translate_project(profit_project)
        model = ChoiceModel(ast)
        names = used_variables(profit_project)
        assert set(names) == {"region", "age"}
        region_values = [v for v in profit_project.vars["region"].values]
        for assignment in assignments_over_domains(profit_project, names):
            expected = expand_template(profit_project, "q", assignment)
            state = BindingState(model)
            state.bind("region", region_values.index(assignment["region"]) + 1)
            state.bind("age", assignment["age"])
            assert reduce_rule_strict(model, state, "q") == expected

    def test_branch_expansion_equivalence(self):
        source = 'Q {% if var("x") = 1 %}one{% else %}two{% endif %} T {{var("x")}}'
        project = ProjectGraph(
            models={"m": TemplatedModel("m", source)},
            vars={"x": VarDecl("x", type="int", min=1, max=2)},
        )
        ast = translate_project(project)
        model = ChoiceModel(ast)
        for x in (1, 2):
            expected = expand_template(project, "m", {"x": x})
            state = BindingState(model)
            state.bind("x", x)
            state.bind("sel1", 1 if x == 1 else 2)
            assert reduce_rule_strict(model, state, "m") == expected


class TestLoadProject:
    def test_fixture_layout(self, profit_project):
        assert set(profit_project.models) == {"q", "usa", "eur"}
        assert profit_project.vars["region"].values == ["usa", "eur"]
        assert profit_project.vars["age"].min == 18
