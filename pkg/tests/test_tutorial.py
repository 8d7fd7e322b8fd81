"""Tutorial planning and replay tests."""

import random

import pytest

from dig.binding import BindingState
from dig.choices import ChoiceModel, QualifiedName
from dig.errors import InvalidStateError, UnreachableStateError
from dig.interface import synthesize, synthesize_default
from dig.parser import parse_grammar
from dig.tutorial import observable_bindings, plan_tutorial, replay, states_equal


@pytest.fixture()
def fig1_setup(fig1_ast):
    model = ChoiceModel(fig1_ast)
    spec = synthesize(fig1_ast)
    return model, spec


class TestPlan:
    def test_paper_start_end_pair(self, fig1_setup):
        model, spec = fig1_setup
        start = BindingState(model)
        for name, value in {"t": 1, "s": 10, "e": 23}.items():
            start.bind(name, value)
        end = BindingState(model)
        for name, value in {"t": 2, "s": 1, "e": 2}.items():
            end.bind(name, value)
        steps = plan_tutorial(model, spec, start, end)
        assert len(steps) == 2
        assert steps[0].interaction_id == "i_t"
        assert steps[0].payload == {"index": 2}
        assert steps[1].interaction_id == "i_s_e"
        assert steps[1].payload == {"lo": 1, "hi": 2}
        result = replay(model, spec, start, steps)
        assert states_equal(result, end)

    def test_start_equals_end_empty_plan(self, fig1_setup):
        model, spec = fig1_setup
        state = BindingState(model)
        state.bind("t", 1)
        assert plan_tutorial(model, spec, state, state) == []

    def test_single_shared_widget_is_one_step(self, fig1_setup):
        model, spec = fig1_setup
        start = BindingState(model)
        for name, value in {"t": 1, "s": 10, "e": 23}.items():
            start.bind(name, value)
        end = BindingState(model)
        for name, value in {"t": 1, "s": 2, "e": 5}.items():
            end.bind(name, value)
        steps = plan_tutorial(model, spec, start, end)
        assert [s.interaction_id for s in steps] == ["i_s_e"]

    def test_violating_state_rejected(self, fig1_setup):
        model, spec = fig1_setup
        bad = BindingState(model)
        bad.bind("s", 9)
        bad.bind("e", 2)
        good = BindingState(model)
        with pytest.raises(InvalidStateError):
            plan_tutorial(model, spec, bad, good)

    def test_uncovered_variable_unreachable(self, fig1_setup):
        model, spec = fig1_setup
        spec = synthesize(model.ast)
        spec.mappings = [m for m in spec.mappings if m.variable != "t"]
        start = BindingState(model)
        end = BindingState(model)
        end.bind("t", 2)
        with pytest.raises(UnreachableStateError):
            plan_tutorial(model, spec, start, end)

    def test_ancestor_selection_ordered_first(self):
        ast = parse_grammar(
            "q = 'X ' outer\n"
            "outer = 'none' | 'v=' inner\n"
            "inner = { n:int | n >= 0 and n <= 3 }\n"
        )
        model = ChoiceModel(ast)
        spec = synthesize(ast)
        start = BindingState(model)
        start.bind("outer", 1)
        end = BindingState(model)
        end.bind("outer", 2)
        end.bind("outer/inner", 3)
        steps = plan_tutorial(model, spec, start, end)
        bound_order = [list(s.values) for s in steps]
        assert bound_order.index(["outer"]) < bound_order.index(["outer/inner"])
        assert states_equal(replay(model, spec, start, steps), end)

    def test_equality_class_changes_one_step(self, crossfilter_model, backend):
        spec = synthesize(crossfilter_model, backend)
        start = BindingState(crossfilter_model, backend)
        end = BindingState(crossfilter_model, backend)
        end.bind("q1/pd", 2)
        steps = plan_tutorial(crossfilter_model, spec, start, end, backend)
        assert len(steps) == 1
        result = replay(crossfilter_model, spec, start, steps, backend)
        assert states_equal(result, end)

    def test_text_input_payload_is_reduced_query(self, fig1_ast):
        model = ChoiceModel(fig1_ast)
        spec = synthesize_default(fig1_ast)
        start = BindingState(model)
        end = BindingState(model)
        for name, value in {"t": 2, "s": 1, "e": 2}.items():
            end.bind(name, value)
        steps = plan_tutorial(model, spec, start, end)
        assert len(steps) == 1
        assert steps[0].payload["text"].startswith("SELECT year")
        assert states_equal(replay(model, spec, start, steps), end)


NESTED = (
    "q = 'SELECT ' branch ' FROM t WHERE ' lo:$a '-' hi:$b\n"
    "branch = 'count(*)' | 'sum(' col ')'\n"
    "col = { s:str | s in ['x', 'y', 'z'] }\n"
    "lo = { n:int | n >= 0 and n <= 9 }\n"
    "hi = { n:int | n >= 0 and n <= 9 }\n"
    "constraint $a <= $b\n"
)


class TestRandomizedReplay:
    def _random_state(self, model, rng):
        state = BindingState(model)
        while True:
            state.clear()
            branch = rng.randint(1, 2)
            state.bind("branch", branch)
            if branch == 2:
                state.bind("branch/col", rng.choice(["x", "y", "z"]))
            a = rng.randint(0, 9)
            b = rng.randint(a, 9)
            state.bind("a", a)
            state.bind("b", b)
            if not state.violations:
                return state

    def test_replay_exact_over_100_random_pairs(self):
        ast = parse_grammar(NESTED)
        model = ChoiceModel(ast)
        spec = synthesize(ast)
        rng = random.Random(11)
        order = model.order
        for _ in range(110):
            start = self._random_state(model, rng)
            end = self._random_state(model, rng)
            steps = plan_tutorial(model, spec, start, end)
            # dependency order respected within the step sequence
            seen: list[str] = []
            for step in steps:
                for name in step.values:
                    for ancestor in order.ancestors(QualifiedName.parse(name)):
                        if str(ancestor) in [v for s in steps for v in s.values]:
                            assert str(ancestor) in seen or str(ancestor) in step.values
                seen.extend(step.values)
            result = replay(model, spec, start, steps)
            assert states_equal(result, end), (
                observable_bindings(result), observable_bindings(end),
            )

    def test_minimal_step_count(self):
        # with disjoint per-variable widgets the plan has one step per
        # changed widget, never more
        ast = parse_grammar(NESTED)
        model = ChoiceModel(ast)
        spec = synthesize(ast)
        rng = random.Random(5)
        for _ in range(40):
            start = self._random_state(model, rng)
            end = self._random_state(model, rng)
            steps = plan_tutorial(model, spec, start, end)
            changed = {
                q for q, v in observable_bindings(end).items()
                if q not in observable_bindings(start)
                or observable_bindings(start)[q] != v
            }
            touched_widgets = {
                m.interaction_id for m in spec.mappings
                if QualifiedName.parse(m.variable) in changed
            }
            assert len(steps) <= max(len(touched_widgets), 0)
