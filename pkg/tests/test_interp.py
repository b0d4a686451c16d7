"""Execution semantics: one oracle row per operation, plus failure rules."""
import pytest

from recompose.interp import STEP_LIMIT, eval_program, solves
from recompose.parsing import parse
from recompose.task import Example
from recompose.values import Bottom, is_bottom, values_equal

from helpers import F1_TEXT, FIG1_ROWS, GOOD_TEXT


def run(text, *inputs):
    return eval_program(parse(text), inputs)


# (program, inputs, expected) — the executable behavior table
CASES = [
    ('fn(x0) { return split(x0, ",") }', ("a,b,,c",), ["a", "b", "", "c"]),
    ('fn(x0) { return split(x0, ", ") }',
     ("17 Bruce Pl, East Kilbride, Glasgow G75 0PU",),
     ["17 Bruce Pl", "East Kilbride", "Glasgow G75 0PU"]),
    ('fn(x0) { return join("-", x0) }', (["a", "b"],), "a-b"),
    ('fn(x0) { return join("", x0) }', (["a", "b"],), "ab"),
    ('fn(x0) { return index(x0, 0) }', (["a", "b"],), "a"),
    ('fn(x0) { return index(x0, -1) }', (["a", "b"],), "b"),
    ('fn(x0) { return index(x0, 1) }', ("xyz",), "y"),
    ('fn(x0) { return slice(x0, 1, none) }', (["a", "b", "c"],), ["b", "c"]),
    ('fn(x0) { return slice(x0, none, -1) }', ("abc",), "ab"),
    ('fn(x0) { return slice(x0, -2, none) }', (["a", "b", "c"],), ["b", "c"]),
    ('fn(x0, x1) { return concat(x0, "-", x1) }', ("a", "b"), "a-b"),
    ('fn(x0) { return strip(x0) }', ("  a b  ",), "a b"),
    ('fn(x0) { return upper(x0) }', ("aBc",), "ABC"),
    ('fn(x0) { return lower(x0) }', ("aBc",), "abc"),
    ('fn(x0) { return replace(x0, "-", "+") }', ("a-b-c",), "a+b+c"),
    ('fn(x0) { return regex_group(x0, "([0-9]+)", 1) }', ("ab 12 cd",), "12"),
    ('fn(x0) { return regex_group(x0, "[0-9]+", 0) }', ("ab 12",), "12"),
    ('fn(x0) { return len(x0) }', ("abcd",), 4),
    ('fn(x0) { return len(x0) }', (["a", "b"],), 2),
    ('fn(x0) { return to_text(x0) }', (17,), "17"),
    ('fn(x0) { return to_text(x0) }', (True,), "true"),
    ('fn(x0) { return to_text(x0) }', (False,), "false"),
    ('fn(x0) { return to_text(x0) }', ("s",), "s"),
    ('fn(x0) { return eq(x0, "a") }', ("a",), True),
    ('fn(x0) { return eq(len(x0), 3) }', ("abc",), True),
    ('fn(x0) { return contains(x0, "-") }', ("a-b",), True),
    ('fn(x0) { return starts_with(x0, "ID:") }', ("ID:9",), True),
    ('fn(x0) { return ends_with(x0, "PU") }', ("G75 0PU",), True),
    ('fn(x0) { return len_eq(split(x0, ", "), 3) }',
     ("a, b, c",), True),
    ('fn(x0) { return matches(x0, "^[0-9]+$") }', ("123",), True),
    ('fn(x0) { return matches(x0, "^[0-9]+$") }', ("12a",), False),
    ('fn(x0) { return matches(x0, "[0-9]") }', ("ab3cd",), True),
    ('fn(x0) { return if(contains(x0, "-"), "y", "n") }', ("a-b",), "y"),
    ('fn(x0) { return if(contains(x0, "-"), "y", "n") }', ("ab",), "n"),
]


@pytest.mark.parametrize("text,inputs,expected", CASES)
def test_operation_semantics(text, inputs, expected):
    assert values_equal(run(text, *inputs), expected)


BOTTOM_CASES = [
    ('fn(x0) { return index(x0, 5) }', (["a"],), "out of range"),
    ('fn(x0) { return index(x0, 0) }', (3,), ""),
    ('fn(x0) { return split(x0, "") }', ("ab",), "empty separator"),
    ('fn(x0) { return split(x0, ",") }', (7,), ""),
    ('fn(x0) { return join("-", x0) }', (["a", 1],), "list of text"),
    ('fn(x0) { return join("-", x0) }', ("nope",), ""),
    ('fn(x0, x1) { return concat(x0, x1) }', ("a", 3), "concat expects text"),
    ('fn(x0) { return regex_group(x0, "([0-9]+)", 2) }', ("12",), "group 2"),
    ('fn(x0) { return regex_group(x0, "zzz", 0) }', ("ab",), "no regex match"),
    ('fn(x0) { return strip(x0) }', (1,), ""),
    ('fn(x0) { return len(x0) }', (5,), ""),
]


@pytest.mark.parametrize("text,inputs,why", BOTTOM_CASES)
def test_failures_are_values_not_exceptions(text, inputs, why):
    got = run(text, *inputs)
    assert is_bottom(got)
    assert why in got.reason


class TestProgramLevelRules:
    def test_arity_mismatch_is_failure(self):
        assert is_bottom(eval_program(parse('fn(x0) { return x0 }'), ("a", "b")))

    def test_bottom_inputs_poison_everything(self):
        got = eval_program(parse('fn(x0) { return "const" }'), (Bottom("in"),))
        assert is_bottom(got)

    def test_bindings_evaluate_eagerly(self):
        """A failing binding fails the program even if the result ignores it."""
        got = run('fn(x0) { let a = index(x0, 9); return "const" }', "ab")
        assert is_bottom(got)

    def test_if_runs_only_the_taken_branch(self):
        # the untaken branch would fail; the guard routes around it
        text = ('fn(x0) { return if(contains(x0, "-"), '
                'index(split(x0, "-"), 1), index(split(x0, "_"), 1)) }')
        assert run(text, "a-b") == "b"
        assert run(text, "a_b") == "b"

    def test_if_guard_failure_propagates(self):
        text = 'fn(x0) { return if(eq(index(x0, 9), "z"), "a", "b") }'
        assert is_bottom(run(text, "ab"))

    def test_step_budget_stops_huge_evaluations(self):
        # deep nesting would exceed the parser's recursion cap long before
        # the step budget, so construct the expression tree directly
        from recompose.syntax import Input, Program, Strip
        e = Input(0)
        for _ in range(STEP_LIMIT + 1):
            e = Strip(e)
        got = eval_program(Program(1, (), e), ("a",))
        assert is_bottom(got)
        assert "budget" in got.reason or "recursion" in got.reason


def test_worked_example_candidate_outputs():
    """The plausible-but-wrong candidate keeps the city name on every row."""
    prog = parse(F1_TEXT)
    got = [eval_program(prog, (i,)) for i, _ in FIG1_ROWS]
    assert got == [
        "17 Bruce Pl, Glasgow G75 0PU",
        "11 The Oak Field, Hastings TN35 4HQ",
        "18 Round Hills, Waltham Abbey EN9 1TP",
        "18 Russell Rd, Edinburgh EH11 3YT",
    ]
    examples = [Example((i,), o) for i, o in FIG1_ROWS]
    ok, flags = solves(prog, examples)
    assert not ok
    assert flags == [False, False, False, False]


def test_worked_example_solution():
    examples = [Example((i,), o) for i, o in FIG1_ROWS]
    ok, flags = solves(parse(GOOD_TEXT), examples)
    assert ok and all(flags)
