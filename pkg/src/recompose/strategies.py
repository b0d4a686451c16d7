"""Failure-guided recovery pipeline.

One generator call produces a candidate program.  When the candidate fails
the training examples, parts of it are still worth keeping; each strategy
salvages a different part, builds a strictly simpler subtask for the
generator, and composes the pieces back together:

* ``forward_all`` — keep the whole candidate as a first stage and learn a
  fix-up from its outputs to the expected outputs;
* ``forward1`` — keep the candidate's first input-consuming operation and
  learn the rest from that operation's outputs;
* ``backward1`` — keep the candidate's final operation, infer what its
  operands must have been (inverse evaluation, verified forward), and learn
  a program per operand;
* ``if_then_else`` — keep the candidate for the examples it already solves,
  learn a second program for the rest, and learn a condition routing
  between the two.

Every composed result is checked against the training examples before it is
returned, so a returned program is always a solution no matter what the
generator proposed.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Optional, Sequence

from .dataflow import (
    SuffixProgram, UnsupportedShape, build_graph, extract_backward1,
    extract_forward1,
)
from .generators.base import (
    Generator, GeneratorRequest, HoleQuery, RequestKind,
)
from .generators.conditions import ConditionNotFound, learn_condition
from .generators.inverse import (
    BACKPROP_SAMPLES, BackpropFailed, BackpropQuery, HoleAssignment, backprop,
)
from .interp import eval_program, solves
from .parsing import pretty
from .syntax import (
    ConstText, Eq, Expr, If, Program, ToText, Var, fresh_name, is_condition,
    substitute, validate_program,
)
from .task import Example, PbeTask
from .values import is_bottom, render_value

logger = logging.getLogger(__name__)

__all__ = [
    "Strategy", "Phase", "PipelineConfig", "StrategyOutcome", "Unsolved",
    "ArityMismatch", "compose_sequential", "compose_ite", "solve",
    "self_reflect", "strategy_forward_all", "strategy_forward1",
    "strategy_backward1", "strategy_if_then_else", "Session",
]


class Strategy(Enum):
    FORWARD_ALL = "forward_all"
    FORWARD1 = "forward1"
    BACKWARD1 = "backward1"
    IF_THEN_ELSE = "if_then_else"


class Phase(IntEnum):
    """How far a strategy got: candidate executed, decomposition applicable,
    subtasks created, subtasks solved (composed solution verified)."""

    PH0 = 0
    PH1 = 1
    PH2 = 2
    PH3 = 3


DEFAULT_ORDER = (
    Strategy.FORWARD_ALL,
    Strategy.FORWARD1,
    Strategy.BACKWARD1,
    Strategy.IF_THEN_ELSE,
)


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs of the recovery pipeline.

    `budget` caps generator calls per task (the initial candidate and the
    inverse-evaluation round each count as one call).  `recursion_depth`
    of 1 solves subtasks with a single generator call; deeper values re-run
    the whole pipeline on subtasks within the same budget.
    """

    strategy_order: tuple[Strategy, ...] = DEFAULT_ORDER
    recursion_depth: int = 1
    max_prefixes: int = 1
    budget: int = 6
    stop_at_first_success: bool = True

    def __post_init__(self) -> None:
        if sorted(s.value for s in self.strategy_order) != sorted(
            s.value for s in DEFAULT_ORDER
        ):
            raise ValueError(
                "strategy_order must be a permutation of the four strategies"
            )
        if self.recursion_depth < 1:
            raise ValueError("recursion_depth must be >= 1")
        if self.max_prefixes < 1:
            raise ValueError("max_prefixes must be >= 1")
        if self.budget < 2:
            raise ValueError("budget must be >= 2 (candidate + one repair call)")


@dataclass(frozen=True)
class StrategyOutcome:
    """Result of one strategy (or of the whole pipeline).

    `phase_reached` is None when the strategy never became applicable;
    `program` is present exactly when the final phase was reached, and then
    it solves every training example.
    """

    strategy: Optional[Strategy]
    phase_reached: Optional[Phase]
    program: Optional[Program]
    generator_calls: int
    trace: tuple[str, ...] = ()


class Unsolved(Exception):
    """The pipeline failed; per-strategy outcomes attached."""

    def __init__(self, outcomes: Sequence[StrategyOutcome], generator_calls: int,
                 task_id: str = ""):
        self.outcomes = tuple(outcomes)
        self.generator_calls = generator_calls
        self.task_id = task_id
        phases = ", ".join(
            f"{o.strategy.value if o.strategy else 'initial'}="
            f"{'-' if o.phase_reached is None else o.phase_reached.name.lower()}"
            for o in self.outcomes
        )
        super().__init__(
            f"no solution{f' for {task_id}' if task_id else ''} "
            f"after {generator_calls} generator call(s)"
            + (f" ({phases})" if phases else "")
        )


class ArityMismatch(ValueError):
    """Programs being composed disagree on arity."""


class _BudgetExhausted(Exception):
    pass


class Session:
    """Budgeted, counted access to a generator for one task."""

    def __init__(self, generator: Generator, budget: int, calls: int = 0):
        self.generator = generator
        self.budget = budget
        self.calls = calls

    def _charge(self) -> None:
        if self.calls >= self.budget:
            raise _BudgetExhausted()
        self.calls += 1

    def generate(
        self,
        examples: Sequence[Example],
        kind: RequestKind,
        context: Optional[str] = None,
        sample_count: int = 1,
        temperature: float = 0.0,
    ) -> list[Program]:
        self._charge()
        request = GeneratorRequest(
            examples=tuple(examples), kind=kind, context=context,
            sample_count=sample_count, temperature=temperature,
        )
        return self.generator.generate(request)

    def backprop(self, suffix: SuffixProgram,
                 queries: Sequence[HoleQuery]) -> HoleAssignment:
        self._charge()
        query = BackpropQuery(suffix, tuple(queries), BACKPROP_SAMPLES)
        return backprop(query, self.generator)

    def condition(self, class1, class2) -> Program:
        self._charge()
        return learn_condition(class1, class2, self.generator)


# --------------------------------------------------------------------------
# composition


def compose_sequential(first: Program, second: Program) -> Program:
    """Feed `first`'s output into unary `second`; fails like either stage.

    The result evaluates to ``second(first(v))`` whenever ``first(v)`` is
    not a failure, and to that failure otherwise.
    """
    if second.params != 1:
        raise ArityMismatch(
            f"second stage must take exactly one input, takes {second.params}"
        )
    taken: set[str] = set()
    bindings: list[tuple[str, Expr]] = []
    var_map: dict[str, Expr] = {}
    for name, expr in first.bindings:
        new = fresh_name(taken)
        bindings.append((new, substitute(expr, var_map=var_map)))
        var_map[name] = Var(new)
    bridge = fresh_name(taken)
    bindings.append((bridge, substitute(first.ret, var_map=var_map)))

    var_map2: dict[str, Expr] = {}
    input_map = {0: Var(bridge)}
    for name, expr in second.bindings:
        new = fresh_name(taken)
        bindings.append(
            (new, substitute(expr, var_map=var_map2, input_map=input_map))
        )
        var_map2[name] = Var(new)
    ret = substitute(second.ret, var_map=var_map2, input_map=input_map)
    return validate_program(Program(first.params, tuple(bindings), ret))


def _inline(p: Program) -> Expr:
    env: dict[str, Expr] = {}
    for name, expr in p.bindings:
        env[name] = substitute(expr, var_map=env)
    return substitute(p.ret, var_map=env)


def compose_ite(cond: Program, then_prog: Program, else_prog: Program) -> Program:
    """Guarded choice between two programs of the same arity.

    Pointwise: where the condition evaluates true the result is the first
    program's value, where false the second's, and a failing condition
    fails the whole program.
    """
    if not cond.params == then_prog.params == else_prog.params:
        raise ArityMismatch(
            f"arity mismatch: condition={cond.params}, "
            f"then={then_prog.params}, else={else_prog.params}"
        )
    guard = _inline(cond)
    if not is_condition(guard):
        # any boolean-valued expression can serve once bridged to an atom
        guard = Eq(ToText(guard), ConstText("true"))
    body = If(guard, _inline(then_prog), _inline(else_prog))
    return validate_program(Program(cond.params, (), body))


# --------------------------------------------------------------------------
# subtask solving


def _solve_subtask(
    session: Session,
    examples: Sequence[Example],
    cfg: PipelineConfig,
    depth: int,
    trace: list[str],
    label: str,
) -> Optional[Program]:
    if depth <= 1:
        found = session.generate(examples, RequestKind.SUBTASK_SYNTHESIS)
        for prog in found:
            if solves(prog, examples)[0]:
                trace.append(f"{label} event=subtask_solved size={prog.size()}")
                return prog
        trace.append(f"{label} event=subtask_unsolved candidates={len(found)}")
        return None
    try:
        outcome = _pipeline(examples, session,
                            replace(cfg, recursion_depth=depth - 1), "")
        return outcome.program
    except Unsolved:
        trace.append(f"{label} event=subtask_unsolved depth={depth}")
        return None


# --------------------------------------------------------------------------
# the four strategies


def _outcome(strategy: Strategy, phase: Optional[Phase], program: Optional[Program],
             session: Session, trace: Sequence[str]) -> StrategyOutcome:
    return StrategyOutcome(strategy, phase, program, session.calls, tuple(trace))


def strategy_forward_all(
    task: Sequence[Example], candidate: Program, gen: "Generator | Session",
    config: Optional[PipelineConfig] = None,
) -> StrategyOutcome:
    """Keep the whole candidate; learn outputs -> expected outputs."""
    cfg = config or PipelineConfig()
    session = gen if isinstance(gen, Session) else Session(gen, cfg.budget)
    train = tuple(task)
    trace: list[str] = ["strategy=forward_all"]
    try:
        values = [eval_program(candidate, ex.inputs) for ex in train]
        bad = next((v for v in values if is_bottom(v)), None)
        if bad is not None:
            trace.append(f"event=candidate_bottom reason={bad.reason!r}")
            return _outcome(Strategy.FORWARD_ALL, Phase.PH0, None, session, trace)
        subtask = [Example((v,), ex.output) for v, ex in zip(values, train)]
        trace.append(f"event=subtask_created examples={len(subtask)}")
        rest = _solve_subtask(session, subtask, cfg, cfg.recursion_depth,
                              trace, "strategy=forward_all")
        if rest is None:
            return _outcome(Strategy.FORWARD_ALL, Phase.PH2, None, session, trace)
        composed = compose_sequential(candidate, rest)
        if not solves(composed, train)[0]:
            trace.append("event=composition_rejected")
            return _outcome(Strategy.FORWARD_ALL, Phase.PH2, None, session, trace)
        trace.append("event=composed")
        return _outcome(Strategy.FORWARD_ALL, Phase.PH3, composed, session, trace)
    except _BudgetExhausted:
        trace.append("event=budget_exhausted")
        return _outcome(Strategy.FORWARD_ALL, Phase.PH2, None, session, trace)


def strategy_forward1(
    task: Sequence[Example], candidate: Program, gen: "Generator | Session",
    config: Optional[PipelineConfig] = None,
    graph=None,
) -> StrategyOutcome:
    """Keep the candidate's first input-consuming operation."""
    cfg = config or PipelineConfig()
    session = gen if isinstance(gen, Session) else Session(gen, cfg.budget)
    train = tuple(task)
    trace: list[str] = ["strategy=forward1"]
    if graph is None:
        try:
            graph = build_graph(candidate)
        except UnsupportedShape as exc:
            trace.append(f"event=no_graph reason={str(exc)!r}")
            return _outcome(Strategy.FORWARD1, Phase.PH0, None, session, trace)
    prefixes = extract_forward1(graph)
    if not prefixes:
        trace.append("event=no_prefix")
        return _outcome(Strategy.FORWARD1, Phase.PH0, None, session, trace)
    phase = Phase.PH1
    try:
        for prefix in prefixes[: cfg.max_prefixes]:
            label = f"strategy=forward1 prefix={prefix.op}"
            values = [eval_program(prefix.program, ex.inputs) for ex in train]
            if any(is_bottom(v) for v in values):
                trace.append(f"{label} event=prefix_bottom")
                continue
            phase = max(phase, Phase.PH2)
            subtask = [Example((v,), ex.output) for v, ex in zip(values, train)]
            trace.append(f"{label} event=subtask_created examples={len(subtask)}")
            rest = _solve_subtask(session, subtask, cfg, cfg.recursion_depth,
                                  trace, label)
            if rest is None:
                continue
            composed = compose_sequential(prefix.program, rest)
            if not solves(composed, train)[0]:
                trace.append(f"{label} event=composition_rejected")
                continue
            trace.append(f"{label} event=composed")
            return _outcome(Strategy.FORWARD1, Phase.PH3, composed, session, trace)
    except _BudgetExhausted:
        trace.append("event=budget_exhausted")
    return _outcome(Strategy.FORWARD1, phase, None, session, trace)


def strategy_backward1(
    task: Sequence[Example], candidate: Program, gen: "Generator | Session",
    config: Optional[PipelineConfig] = None,
    graph=None,
) -> StrategyOutcome:
    """Keep the candidate's final operation; invert it, then fill the holes."""
    cfg = config or PipelineConfig()
    session = gen if isinstance(gen, Session) else Session(gen, cfg.budget)
    train = tuple(task)
    trace: list[str] = ["strategy=backward1"]
    if graph is None:
        try:
            graph = build_graph(candidate)
        except UnsupportedShape as exc:
            trace.append(f"event=no_graph reason={str(exc)!r}")
            return _outcome(Strategy.BACKWARD1, Phase.PH0, None, session, trace)
    try:
        suffix = extract_backward1(graph)
    except UnsupportedShape as exc:
        trace.append(f"event=no_suffix reason={str(exc)!r}")
        return _outcome(Strategy.BACKWARD1, Phase.PH0, None, session, trace)
    trace.append(
        f"event=suffix_extracted op={suffix.op} holes={len(suffix.holes)}"
    )
    phase = Phase.PH1
    try:
        queries = [HoleQuery(ex.output, ex.inputs) for ex in train]
        try:
            assignment = session.backprop(suffix, queries)
        except BackpropFailed as exc:
            trace.append(f"event=backprop_failed missing={list(exc.missing)}")
            return _outcome(Strategy.BACKWARD1, phase, None, session, trace)
        phase = Phase.PH2
        trace.append("event=backprop_verified")
        hole_programs: list[Program] = []
        for k in range(len(suffix.holes)):
            subtask = [
                Example(ex.inputs, assignment.values[i][k])
                for i, ex in enumerate(train)
            ]
            label = f"strategy=backward1 hole={k}"
            prog = _solve_subtask(session, subtask, cfg, cfg.recursion_depth,
                                  trace, label)
            if prog is None:
                return _outcome(Strategy.BACKWARD1, phase, None, session, trace)
            hole_programs.append(prog)
        composed = _compose_backward(candidate.params, suffix, hole_programs)
        if not solves(composed, train)[0]:
            trace.append("event=composition_rejected")
            return _outcome(Strategy.BACKWARD1, phase, None, session, trace)
        trace.append("event=composed")
        return _outcome(Strategy.BACKWARD1, Phase.PH3, composed, session, trace)
    except _BudgetExhausted:
        trace.append("event=budget_exhausted")
        return _outcome(Strategy.BACKWARD1, phase, None, session, trace)


def _compose_backward(
    params: int, suffix: SuffixProgram, hole_programs: Sequence[Program]
) -> Program:
    """One program per hole, stitched under the salvaged final operation."""
    taken: set[str] = set()
    bindings: list[tuple[str, Expr]] = []
    hole_exprs: list[Expr] = []
    for prog in hole_programs:
        if prog.params != params:
            raise ArityMismatch(
                f"hole program takes {prog.params} inputs, task has {params}"
            )
        var_map: dict[str, Expr] = {}
        for name, expr in prog.bindings:
            new = fresh_name(taken)
            bindings.append((new, substitute(expr, var_map=var_map)))
            var_map[name] = Var(new)
        out = fresh_name(taken)
        bindings.append((out, substitute(prog.ret, var_map=var_map)))
        hole_exprs.append(Var(out))
    ret = suffix.recompose(hole_exprs)
    return validate_program(Program(params, tuple(bindings), ret))


def strategy_if_then_else(
    task: Sequence[Example], candidate: Program, ex1: Sequence[int],
    gen: "Generator | Session", config: Optional[PipelineConfig] = None,
) -> StrategyOutcome:
    """Keep the candidate where it works; learn the rest plus a router.

    `ex1` lists the train rows the candidate already solves.  Applicability
    ladder: the candidate must run without failure somewhere (else no phase
    at all), solve at least one row (else the decomposition never starts),
    and leave at least one row unsolved.
    """
    cfg = config or PipelineConfig()
    session = gen if isinstance(gen, Session) else Session(gen, cfg.budget)
    train = tuple(task)
    trace: list[str] = ["strategy=if_then_else"]
    executed = [not is_bottom(eval_program(candidate, ex.inputs)) for ex in train]
    if not any(executed):
        trace.append("event=candidate_bottom_everywhere")
        return _outcome(Strategy.IF_THEN_ELSE, None, None, session, trace)
    ex1_set = sorted(set(ex1))
    if not ex1_set:
        trace.append("event=no_solved_rows")
        return _outcome(Strategy.IF_THEN_ELSE, Phase.PH0, None, session, trace)
    if len(ex1_set) == len(train):
        trace.append("event=nothing_unsolved")
        return _outcome(Strategy.IF_THEN_ELSE, Phase.PH0, None, session, trace)
    ex2_set = [i for i in range(len(train)) if i not in ex1_set]
    trace.append(f"event=partitioned solved={len(ex1_set)} rest={len(ex2_set)}")
    phase = Phase.PH1
    try:
        rest_examples = [train[i] for i in ex2_set]
        found = session.generate(rest_examples, RequestKind.SUBTASK_SYNTHESIS)
        second = next((p for p in found if solves(p, rest_examples)[0]), None)
        if second is None:
            trace.append("event=rest_unsolved")
            return _outcome(Strategy.IF_THEN_ELSE, phase, None, session, trace)
        phase = Phase.PH2
        trace.append(f"event=rest_solved size={second.size()}")
        try:
            cond = session.condition(
                [train[i].inputs for i in ex1_set],
                [train[i].inputs for i in ex2_set],
            )
        except (ConditionNotFound, ValueError) as exc:
            trace.append(f"event=condition_not_found reason={str(exc)!r}")
            return _outcome(Strategy.IF_THEN_ELSE, phase, None, session, trace)
        trace.append(f"event=condition_found cond={pretty(cond)!r}")
        composed = compose_ite(cond, candidate, second)
        if not solves(composed, train)[0]:
            trace.append("event=composition_rejected")
            return _outcome(Strategy.IF_THEN_ELSE, phase, None, session, trace)
        trace.append("event=composed")
        return _outcome(Strategy.IF_THEN_ELSE, Phase.PH3, composed, session, trace)
    except _BudgetExhausted:
        trace.append("event=budget_exhausted")
        return _outcome(Strategy.IF_THEN_ELSE, phase, None, session, trace)


# --------------------------------------------------------------------------
# the pipeline


def _run_strategy(
    strategy: Strategy, train: tuple[Example, ...], candidate: Program,
    ex1: list[int], graph, session: Session, cfg: PipelineConfig,
) -> StrategyOutcome:
    if strategy is Strategy.FORWARD_ALL:
        return strategy_forward_all(train, candidate, session, cfg)
    if strategy is Strategy.FORWARD1:
        return strategy_forward1(train, candidate, session, cfg, graph=graph)
    if strategy is Strategy.BACKWARD1:
        return strategy_backward1(train, candidate, session, cfg, graph=graph)
    return strategy_if_then_else(train, candidate, ex1, session, cfg)


def _pipeline(
    train: Sequence[Example], session: Session, cfg: PipelineConfig,
    task_id: str,
) -> StrategyOutcome:
    train = tuple(train)
    try:
        found = session.generate(train, RequestKind.INITIAL_SYNTHESIS)
    except _BudgetExhausted:
        raise Unsolved((), session.calls, task_id)
    if not found:
        raise Unsolved(
            (StrategyOutcome(None, Phase.PH0, None, session.calls,
                             ("event=no_initial_candidate",)),),
            session.calls, task_id,
        )
    candidate = found[0]
    ok, flags = solves(candidate, train)
    if ok:
        return StrategyOutcome(
            None, Phase.PH3, candidate, session.calls,
            ("event=initial_candidate_solves",),
        )
    ex1 = [i for i, f in enumerate(flags) if f]
    try:
        graph = build_graph(candidate)
    except UnsupportedShape:
        graph = None

    outcomes: list[StrategyOutcome] = []
    winner: Optional[StrategyOutcome] = None
    for strategy in cfg.strategy_order:
        outcome = _run_strategy(strategy, train, candidate, ex1, graph,
                                session, cfg)
        if outcome.program is not None and not solves(outcome.program, train)[0]:
            # belt and suspenders: never let an unverified program escape
            outcome = replace(outcome, program=None,
                              trace=outcome.trace + ("event=final_check_failed",))
        outcomes.append(outcome)
        if outcome.program is not None:
            winner = outcome
            if cfg.stop_at_first_success:
                break
    if winner is not None:
        return replace(winner, generator_calls=session.calls)
    raise Unsolved(outcomes, session.calls, task_id)


def solve(
    task: PbeTask, generator: Generator, config: Optional[PipelineConfig] = None,
) -> StrategyOutcome:
    """Solve a task's training examples, recovering from a failed candidate.

    Returns the first successful outcome (its `program` solves every
    training example).  Raises :class:`Unsolved` with per-strategy outcomes
    when nothing worked within the budget.
    """
    cfg = config or PipelineConfig()
    session = Session(generator, cfg.budget)
    return _pipeline(task.train, session, cfg, task.id)


# --------------------------------------------------------------------------
# self-reflection baseline


def _reflection_context(candidate: Optional[Program],
                        train: Sequence[Example]) -> str:
    if candidate is None:
        return (
            "Your previous reply contained no parseable program. "
            "Reply with one program in a fenced code block."
        )
    lines = [
        "Your previous program was:",
        "",
        pretty(candidate),
        "",
    ]
    for ex in train:
        got = eval_program(candidate, ex.inputs)
        if is_bottom(got):
            lines.append(
                f"It fails on input [{', '.join(render_value(v) for v in ex.inputs)}]: "
                f"{got.reason}."
            )
            break
        if not solves(candidate, [ex])[0]:
            lines.append(
                f"On input [{', '.join(render_value(v) for v in ex.inputs)}] it "
                f"returned {render_value(got)}, expected {render_value(ex.output)}."
            )
            break
    lines.append("Fix the program.")
    return "\n".join(lines)


def self_reflect(
    task: PbeTask, generator: Generator, rounds: int = 4,
) -> StrategyOutcome:
    """Plain retry baseline: one attempt, then up to `rounds` repair rounds.

    Each repair round shows the failed program and one failure (the fault
    reason, or one incorrectly solved example).  Stops at the first program
    that solves the training examples; uses exactly
    ``1 + min(rounds, failures)`` generator calls.
    """
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    train = task.train
    session = Session(generator, budget=rounds + 1)
    trace: list[str] = ["mode=self_reflect"]
    candidate: Optional[Program] = None
    for attempt in range(rounds + 1):
        context = None if attempt == 0 else _reflection_context(candidate, train)
        found = session.generate(train, RequestKind.INITIAL_SYNTHESIS,
                                 context=context)
        if found:
            candidate = found[0]
        trace.append(
            f"event=attempt round={attempt} parsed={len(found)}"
        )
        if candidate is not None and solves(candidate, train)[0]:
            trace.append("event=solved")
            return StrategyOutcome(None, Phase.PH3, candidate, session.calls,
                                   tuple(trace))
    trace.append("event=gave_up")
    raise Unsolved(
        (StrategyOutcome(None, Phase.PH0, None, session.calls, tuple(trace)),),
        session.calls, task.id,
    )
