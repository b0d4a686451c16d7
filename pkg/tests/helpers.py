"""Shared test machinery: seeded random programs, tasks, and adversaries.

Everything here is deterministic given an explicit ``random.Random``; the
property tests freeze their seeds so a failure reproduces exactly.
"""
from __future__ import annotations

import random
from typing import Optional

from recompose.generators.base import Generator, GeneratorRequest
from recompose.interp import eval_program
from recompose.parsing import pretty
from recompose.syntax import (
    Concat, ConstInt, ConstText, Contains, EndsWith, Eq, Expr, If, Index,
    Input, Join, Len, LenEq, Lower, Matches, Program, Replace, Slice, Split,
    StartsWith, Strip, ToText, Upper, Var, validate_program,
)
from recompose.task import Example, PbeTask, make_task
from recompose.values import is_bottom

# ---------------------------------------------------------------------------
# the worked four-row address corpus used across golden-path tests

FIG1_ROWS = [
    ("17 Bruce Pl, East Kilbride, Glasgow G75 0PU", "17 Bruce Pl, G75 0PU"),
    ("11 The Oak Field, Pett, Hastings TN35 4HQ", "11 The Oak Field, TN35 4HQ"),
    ("18 Round Hills, Waltham Abbey EN9 1TP", "18 Round Hills, EN9 1TP"),
    ("18 Russell Rd, Edinburgh EH11 3YT", "18 Russell Rd, EH11 3YT"),
]

# the plausible-but-wrong first candidate: keeps the city name
F1_TEXT = (
    'fn(x0) { let parts = split(x0, ", "); '
    'return concat(index(parts, 0), ", ", index(parts, -1)) }'
)

# completes the salvaged first step (input: the split list)
FWD1_REST_TEXT = (
    'fn(x0) { return concat(index(x0, 0), ", ", '
    'join(" ", slice(split(index(x0, -1), " "), -2, none))) }'
)

# repairs the whole failed candidate (input: its wrong output)
FWDALL_REST_TEXT = (
    'fn(x0) { return concat(index(split(x0, ", "), 0), ", ", '
    'join(" ", slice(split(x0, " "), -2, none))) }'
)

# a correct standalone solution
GOOD_TEXT = (
    'fn(x0) { let parts = split(x0, ", "); let words = split(x0, " "); '
    'return concat(index(parts, 0), ", ", join(" ", slice(words, -2, none))) }'
)


def fig1_task(task_id: str = "fig1") -> PbeTask:
    return make_task(task_id, [Example((i,), o) for i, o in FIG1_ROWS])


# ---------------------------------------------------------------------------
# random expressions and programs (for round-trip / dataflow / law tests)

_SEPS = (" ", ",", "-", "_", ":", ", ")
_WORDS = ("foo", "bar", "a", "xy", "12", "q-r", "", "one two", "A,B")


def random_text_expr(rng: random.Random, arity: int, depth: int) -> Expr:
    """An expression that usually evaluates to text."""
    if depth <= 0 or rng.random() < 0.3:
        if rng.random() < 0.6:
            return Input(rng.randrange(arity))
        return ConstText(rng.choice(_WORDS))
    pick = rng.randrange(8)
    if pick == 0:
        return Strip(random_text_expr(rng, arity, depth - 1))
    if pick == 1:
        return Upper(random_text_expr(rng, arity, depth - 1))
    if pick == 2:
        return Lower(random_text_expr(rng, arity, depth - 1))
    if pick == 3:
        return Replace(random_text_expr(rng, arity, depth - 1),
                       rng.choice(_SEPS), rng.choice(("", "+", " ")))
    if pick == 4:
        return Join(rng.choice(_SEPS), random_list_expr(rng, arity, depth - 1))
    if pick == 5:
        return Index(random_list_expr(rng, arity, depth - 1),
                     rng.choice((0, 1, -1)))
    if pick == 6:
        parts = tuple(
            random_text_expr(rng, arity, depth - 1)
            for _ in range(rng.choice((2, 2, 3)))
        )
        return Concat(parts)
    return ToText(random_expr(rng, arity, depth - 1))


def random_list_expr(rng: random.Random, arity: int, depth: int) -> Expr:
    if depth <= 0 or rng.random() < 0.5:
        return Split(random_text_expr(rng, arity, max(0, depth - 1)),
                     rng.choice(_SEPS))
    return Slice(
        Split(random_text_expr(rng, arity, depth - 1), rng.choice(_SEPS)),
        rng.choice((None, 0, 1, -2)), rng.choice((None, -1, 2)),
    )


def random_cond_expr(rng: random.Random, arity: int, depth: int) -> Expr:
    src = random_text_expr(rng, arity, depth - 1)
    pick = rng.randrange(6)
    if pick == 0:
        return Contains(src, rng.choice(("a", "-", "1", " ")))
    if pick == 1:
        return StartsWith(src, rng.choice(("f", "1", "x")))
    if pick == 2:
        return EndsWith(src, rng.choice(("o", "r", "2")))
    if pick == 3:
        return LenEq(src, rng.randrange(0, 5))
    if pick == 4:
        return Matches(src, rng.choice(("^[0-9]", "[a-z]$", "foo")))
    return Eq(src, ConstText(rng.choice(_WORDS)))


def random_expr(rng: random.Random, arity: int, depth: int) -> Expr:
    roll = rng.random()
    if roll < 0.55:
        return random_text_expr(rng, arity, depth)
    if roll < 0.75:
        return random_list_expr(rng, arity, depth)
    if roll < 0.85:
        return Len(random_text_expr(rng, arity, depth - 1))
    if roll < 0.95 and depth > 0:
        return If(random_cond_expr(rng, arity, depth),
                  random_text_expr(rng, arity, depth - 1),
                  random_text_expr(rng, arity, depth - 1))
    return random_cond_expr(rng, arity, max(1, depth))


def random_program(rng: random.Random, arity: Optional[int] = None,
                   max_depth: int = 3) -> Program:
    """A valid random program, sometimes with let-bindings."""
    if arity is None:
        arity = rng.choice((1, 1, 1, 2, 3))
    bindings: list[tuple[str, Expr]] = []
    n_bind = rng.choice((0, 0, 0, 1, 1, 2))
    names = []
    for k in range(n_bind):
        name = f"t{k}"
        expr = random_expr(rng, arity, rng.randrange(1, max_depth + 1))
        # later bindings may reuse earlier ones through a variable reference
        if names and rng.random() < 0.5:
            expr = Concat((Var(rng.choice(names)), ToText(expr)))
        bindings.append((name, expr))
        names.append(name)
    body = random_expr(rng, arity, rng.randrange(1, max_depth + 1))
    if names and rng.random() < 0.7:
        body = Concat((ToText(body), Var(names[-1])))
    return validate_program(Program(arity, tuple(bindings), body))


def random_inputs(rng: random.Random, arity: int) -> tuple:
    def one():
        roll = rng.random()
        if roll < 0.7:
            n = rng.randrange(0, 4)
            seps = [rng.choice(_SEPS) for _ in range(max(0, n - 1))]
            words = [rng.choice(_WORDS) for _ in range(n)]
            text = ""
            for i, w in enumerate(words):
                text += w + (seps[i] if i < len(seps) else "")
            return text
        if roll < 0.85:
            return rng.randrange(-5, 20)
        if roll < 0.92:
            return rng.random() < 0.5
        return [rng.choice(_WORDS) for _ in range(rng.randrange(0, 3))]

    return tuple(one() for _ in range(arity))


def random_task(rng: random.Random, n_examples: int = 4) -> PbeTask:
    """A task whose outputs come from some hidden random program.

    Retries until the hidden program produces failure-free outputs on
    every sampled input row.
    """
    while True:
        program = random_program(rng)
        rows = []
        for _ in range(n_examples):
            inputs = random_inputs(rng, program.params)
            out = eval_program(program, inputs)
            if is_bottom(out):
                break
            rows.append(Example(inputs, out))
        if len(rows) == n_examples:
            return make_task(f"rand-{rng.randrange(10**9)}", rows)


# ---------------------------------------------------------------------------
# ground truths the built-in enumerative search is expected to rediscover

_ORACLE_SEPS = (" ", ",", "-", "_", ":")


def _oracle_input(rng: random.Random, sep: str) -> str:
    alphabet = "abcdefgh123"
    words = [
        "".join(rng.choice(alphabet) for _ in range(rng.randrange(1, 5)))
        for _ in range(rng.randrange(3, 5))
    ]
    return sep.join(words)


def random_oracle_truth(rng: random.Random) -> tuple[Program, PbeTask]:
    """(ground truth of size <= 4, 5-example task it induces)."""
    sep = rng.choice(_ORACLE_SEPS)
    x = Input(0)
    split = Split(x, sep)
    shapes: list[Expr] = [
        Index(split, rng.choice((0, 1, -1, -2))),
        Join(rng.choice(_ORACLE_SEPS), split),
        Join(sep, Slice(split, rng.choice((1, None)), rng.choice((None, -1)))),
        Upper(Index(split, rng.choice((0, -1)))),
        Lower(Upper(x)),
        Strip(x),
        Slice(x, rng.choice((1, 2)), None),
        Index(x, rng.choice((0, 1, -1))),
        Len(x),
        Len(split),
        ToText(Len(x)),
        Replace(x, sep, rng.choice([s for s in _ORACLE_SEPS if s != sep])),
    ]
    body = rng.choice(shapes)
    program = validate_program(Program(1, (), body))
    assert program.size() <= 4, pretty(program)
    rows = []
    guard = 0
    while len(rows) < 5:
        guard += 1
        assert guard < 200, "oracle-truth sampling stalled"
        text = _oracle_input(rng, sep)
        out = eval_program(program, (text,))
        if not is_bottom(out):
            rows.append(Example((text,), out))
    return program, make_task(f"truth-{rng.randrange(10**9)}", rows)


# ---------------------------------------------------------------------------
# adversaries and instrumentation


class AdversarialGenerator(Generator):
    """Returns confidently wrong material: valid-but-irrelevant programs,
    empty batches, junk hole values.  Never raises."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.calls = 0

    def generate(self, request: GeneratorRequest) -> list[Program]:
        self.calls += 1
        roll = self.rng.random()
        if roll < 0.15:
            return []
        arity = len(request.examples[0].inputs)
        out = []
        for _ in range(self.rng.randrange(1, 3)):
            if self.rng.random() < 0.3:
                out.append(Program(arity, (), ConstText("wrong")))
            else:
                out.append(random_program(self.rng, arity=arity))
        return out

    def propose_hole_values(self, suffix, queries, sample_count):
        self.calls += 1
        batches = []
        for q in queries:
            cands = []
            for _ in range(self.rng.randrange(0, sample_count + 1)):
                n = len(suffix.holes)
                if self.rng.random() < 0.2:
                    n = max(1, n - 1)  # wrong width, must be rejected
                cands.append(tuple(
                    self.rng.choice(("junk", "", 7, ["a", "b"]))
                    for _ in range(n)
                ))
            batches.append(cands)
        return batches


class CountingGenerator(Generator):
    """Wraps another generator, counting calls of both kinds."""

    def __init__(self, inner: Generator):
        self.inner = inner
        self.calls = 0

    def generate(self, request: GeneratorRequest) -> list[Program]:
        self.calls += 1
        return self.inner.generate(request)

    def propose_hole_values(self, suffix, queries, sample_count):
        self.calls += 1
        return self.inner.propose_hole_values(suffix, queries, sample_count)


class HybridGenerator(Generator):
    """Scripted first replies, exact search afterwards — lets a test hand
    the pipeline a specific wrong candidate and then watch real recovery."""

    name = "hybrid"

    def __init__(self, scripted):
        from recompose.generators.enumerative import EnumerativeGenerator
        from recompose.generators.mock import MockTranscriptGenerator
        self.scripted = MockTranscriptGenerator(scripted)
        self.enum = EnumerativeGenerator()
        self.handed = 0

    def generate(self, request: GeneratorRequest) -> list[Program]:
        if self.scripted._queue:
            self.handed += 1
            return self.scripted.generate(request)
        return self.enum.generate(request)

    def propose_hole_values(self, suffix, queries, sample_count):
        return self.enum.propose_hole_values(suffix, queries, sample_count)
