"""Benchmark ingestion, splitting, filtering, batch execution, reporting.

A benchmark corpus is a JSON Lines file of example sets.  Each task is
expanded into up to 18 train/test partitions, tasks a bare generator
already solves are filtered out, and the remaining hard tasks are run
through every recovery strategy so the report can show not just how many
tasks each strategy rescues but how the rescued sets overlap.

Reports are deliberately free of wall-clock data so a rerun on the same
corpus with the deterministic generator is byte-identical.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import random
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .generators.base import Generator, GeneratorUnavailable, RequestKind
from .interp import solves
from .parsing import pretty
from .strategies import (
    Phase, PipelineConfig, Session, Strategy, StrategyOutcome, Unsolved,
    self_reflect, strategy_backward1, strategy_forward1, strategy_forward_all,
    strategy_if_then_else, _BudgetExhausted,
)
from .syntax import Program
from .task import Example, InvalidTask, PbeTask, make_task
from .values import value_from_json, value_to_json

logger = logging.getLogger(__name__)

__all__ = [
    "FormatError", "SplitScheme", "default_schemes", "load_tasks",
    "dump_tasks", "make_splits", "FilterResult", "filter_easy",
    "TaskResult", "BenchmarkRun", "run_benchmark", "emit_report",
]

SALVAGE = (Strategy.FORWARD_ALL, Strategy.FORWARD1, Strategy.BACKWARD1)


class FormatError(ValueError):
    """A task file line that cannot become a task."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


# --------------------------------------------------------------------------
# task file IO


def _example_from_json(obj: object, line: int, k: int) -> Example:
    if not isinstance(obj, dict) or "inputs" not in obj or "output" not in obj:
        raise FormatError(line, f"example {k} must be an object with inputs/output")
    raw_inputs = obj["inputs"]
    if not isinstance(raw_inputs, list) or not raw_inputs:
        raise FormatError(line, f"example {k} needs a non-empty inputs array")
    try:
        inputs = tuple(value_from_json(v) for v in raw_inputs)
        output = value_from_json(obj["output"])
    except (TypeError, ValueError) as exc:
        raise FormatError(line, f"example {k}: {exc}") from None
    return Example(inputs, output)


def load_tasks(path: str) -> list[PbeTask]:
    """Read a JSON Lines task file.

    One object per line: ``{"id", "examples", "train"?, "test"?}``; blank
    lines are skipped.  Raises :class:`FormatError` with the offending line
    number for malformed JSON, duplicate ids, mixed arity, or bad splits.
    """
    tasks: list[PbeTask] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise FormatError(line_no, f"invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise FormatError(line_no, "each line must be a JSON object")
            task_id = obj.get("id")
            if not isinstance(task_id, str) or not task_id:
                raise FormatError(line_no, "missing or empty task id")
            if task_id in seen:
                raise FormatError(line_no, f"duplicate task id {task_id!r}")
            raw_examples = obj.get("examples")
            if not isinstance(raw_examples, list) or not raw_examples:
                raise FormatError(line_no, "missing or empty examples array")
            examples = [
                _example_from_json(e, line_no, k)
                for k, e in enumerate(raw_examples)
            ]
            try:
                task = make_task(task_id, examples,
                                 obj.get("train"), obj.get("test"))
            except InvalidTask as exc:
                raise FormatError(line_no, str(exc)) from None
            seen.add(task_id)
            tasks.append(task)
    return tasks


def dump_tasks(tasks: Sequence[PbeTask]) -> str:
    """Serialize tasks back to the JSON Lines format of :func:`load_tasks`."""
    lines = []
    for t in tasks:
        obj: dict = {
            "id": t.id,
            "examples": [
                {"inputs": [value_to_json(v) for v in ex.inputs],
                 "output": value_to_json(ex.output)}
                for ex in t.examples
            ],
        }
        if t.test_ids:
            obj["train"] = list(t.train_ids)
            obj["test"] = list(t.test_ids)
        lines.append(json.dumps(obj, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


# --------------------------------------------------------------------------
# split schemes


@dataclass(frozen=True)
class SplitScheme:
    """One deterministic way to carve examples into train and test rows.

    `rule(n, task_id)` returns (train_ids, test_ids) or None when the
    scheme does not apply to a task with `n` examples.  Both sides must be
    non-empty and together cover 0..n-1.
    """

    scheme_id: int
    name: str
    rule: Callable[[int, str], Optional[tuple[tuple[int, ...], tuple[int, ...]]]]


def _leading(k: int):
    def rule(n: int, task_id: str):
        if n <= k:
            return None
        return tuple(range(k)), tuple(range(k, n))
    return rule


def _trailing(k: int):
    def rule(n: int, task_id: str):
        if n <= k:
            return None
        return tuple(range(n - k, n)), tuple(range(n - k))
    return rule


def _even_odd(n: int, task_id: str):
    if n < 2:
        return None
    return tuple(range(0, n, 2)), tuple(range(1, n, 2))


def _first_half(n: int, task_id: str):
    if n < 2:
        return None
    cut = (n + 1) // 2
    return tuple(range(cut)), tuple(range(cut, n))


def _stride3(n: int, task_id: str):
    if n < 2:
        return None
    train = tuple(range(0, n, 3))
    test = tuple(i for i in range(n) if i % 3 != 0)
    return (train, test) if train and test else None


def _singleton_first(n: int, task_id: str):
    if n < 2:
        return None
    return (0,), tuple(range(1, n))


def _seeded_fraction(fraction: float, seed: int):
    def rule(n: int, task_id: str):
        if n < 2:
            return None
        rng = random.Random(zlib.crc32(task_id.encode("utf-8")) ^ seed)
        k = min(n - 1, max(1, round(n * fraction)))
        train = tuple(sorted(rng.sample(range(n), k)))
        test = tuple(i for i in range(n) if i not in set(train))
        return train, test
    return rule


def default_schemes(seed: int = 0) -> list[SplitScheme]:
    """The default family of 18 partition schemes.

    Six leading-k and six trailing-k train prefixes/suffixes (k = 2..7),
    even/odd, first-half, every-third-row, two seeded random fractions
    (40% and 60% train), and a single-row train set.  All deterministic
    given (task id, seed); schemes that would leave either side empty are
    skipped per task.
    """
    schemes: list[SplitScheme] = []
    sid = 0
    for k in range(2, 8):
        schemes.append(SplitScheme(sid, f"leading-{k}", _leading(k)))
        sid += 1
    for k in range(2, 8):
        schemes.append(SplitScheme(sid, f"trailing-{k}", _trailing(k)))
        sid += 1
    schemes.append(SplitScheme(sid, "even-odd", _even_odd)); sid += 1
    schemes.append(SplitScheme(sid, "first-half", _first_half)); sid += 1
    schemes.append(SplitScheme(sid, "stride-3", _stride3)); sid += 1
    schemes.append(SplitScheme(
        sid, "random-40", _seeded_fraction(0.4, seed * 2654435761 + 101)))
    sid += 1
    schemes.append(SplitScheme(
        sid, "random-60", _seeded_fraction(0.6, seed * 2654435761 + 202)))
    sid += 1
    schemes.append(SplitScheme(sid, "singleton-first", _singleton_first))
    return schemes


def make_splits(
    task: PbeTask, schemes: Optional[Sequence[SplitScheme]] = None,
    seed: int = 0,
) -> list[PbeTask]:
    """One task instance per applicable scheme, ids suffixed ``#<scheme>``."""
    out: list[PbeTask] = []
    for scheme in schemes if schemes is not None else default_schemes(seed):
        split = scheme.rule(len(task.examples), task.id)
        if split is None:
            continue
        train, test = split
        out.append(make_task(f"{task.id}#{scheme.name}", task.examples,
                             train, test))
    return out


# --------------------------------------------------------------------------
# easy-task filtering


@dataclass(frozen=True)
class FilterResult:
    """Partition of a corpus by bare-generator difficulty."""

    hard: tuple[PbeTask, ...]
    easy: tuple[PbeTask, ...]
    skipped: tuple[tuple[str, str], ...]  # (task_id, reason)


def filter_easy(
    tasks: Sequence[PbeTask], gen: Generator, rounds: int = 4,
) -> FilterResult:
    """Split tasks into hard and easy.

    A task is easy when plain retrying (:func:`self_reflect`, one attempt
    plus up to `rounds` repair rounds) finds a program correct on both the
    train and the test rows.  A generator outage marks the task skipped
    rather than silently hard.
    """
    hard: list[PbeTask] = []
    easy: list[PbeTask] = []
    skipped: list[tuple[str, str]] = []
    for task in tasks:
        try:
            outcome = self_reflect(task, gen, rounds=rounds)
        except Unsolved:
            hard.append(task)
            continue
        except GeneratorUnavailable as exc:
            skipped.append((task.id, str(exc)))
            continue
        if task.test and not solves(outcome.program, task.test)[0]:
            hard.append(task)
        else:
            easy.append(task)
    return FilterResult(tuple(hard), tuple(easy), tuple(skipped))


# --------------------------------------------------------------------------
# batch execution


@dataclass(frozen=True)
class TaskResult:
    task_id: str
    n_train: int
    n_test: int
    initial_parsed: bool
    initial_solves_train: bool
    outcomes: tuple[tuple[str, StrategyOutcome], ...]
    solved_train: tuple[str, ...]
    solved: tuple[str, ...]
    error: Optional[str] = None


@dataclass
class BenchmarkRun:
    config: dict
    results: list[TaskResult] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def counters(self) -> dict:
        """Aggregate phase counts, success rates, overlap regions."""
        per_strategy: dict[str, dict] = {}
        solved_sets: dict[str, set[str]] = {s.value: set() for s in Strategy}
        overfit: dict[str, int] = {s.value: 0 for s in Strategy}
        for strat in Strategy:
            counts = {f"ph{k}": 0 for k in range(4)}
            for res in self.results:
                outcome = dict(res.outcomes).get(strat.value)
                if outcome is None or outcome.phase_reached is None:
                    continue
                for k in range(int(outcome.phase_reached) + 1):
                    counts[f"ph{k}"] += 1
            per_strategy[strat.value] = counts
        initial_solved = 0
        for res in self.results:
            for name in res.solved:
                if name in solved_sets:
                    solved_sets[name].add(res.task_id)
                else:
                    initial_solved += 1
            for name in res.solved_train:
                if name in overfit and name not in res.solved:
                    overfit[name] += 1
        for strat in Strategy:
            name = strat.value
            counts = per_strategy[name]
            ph1 = counts["ph1"]
            counts["pct"] = round(100.0 * counts["ph3"] / ph1, 1) if ph1 else 0.0
            counts["solved"] = len(solved_sets[name])
            counts["overfit"] = overfit[name]
        a, b, c = (solved_sets[s.value] for s in SALVAGE)
        venn = {
            "forward_all_only": len(a - b - c),
            "forward1_only": len(b - a - c),
            "backward1_only": len(c - a - b),
            "forward_all_and_forward1": len((a & b) - c),
            "forward_all_and_backward1": len((a & c) - b),
            "forward1_and_backward1": len((b & c) - a),
            "all_three": len(a & b & c),
        }
        union = len(a | b | c)
        any_strategy = len(set().union(*solved_sets.values()))
        return {
            "per_strategy": per_strategy,
            "venn_regions": venn,
            "union": union,
            "any_strategy": any_strategy,
            "initial_solved": initial_solved,
            "tasks_run": len(self.results),
            "tasks_skipped": len(self.skipped),
        }


def _bench_one(
    task: PbeTask, gen: Generator, cfg: PipelineConfig,
) -> TaskResult:
    """Run every strategy once on one task, with per-strategy budgets.

    The shared initial candidate call is charged to each strategy's
    session, so per-strategy call counts are comparable (2, 2, up to 4,
    and 3 respectively) even though the candidate is produced once.
    """
    train = task.train
    shared = Session(gen, budget=cfg.budget)
    found = shared.generate(train, RequestKind.INITIAL_SYNTHESIS)
    candidate: Optional[Program] = found[0] if found else None
    if candidate is None:
        return TaskResult(task.id, len(train), len(task.test), False, False,
                          (), (), ())
    ok, flags = solves(candidate, train)
    if ok:
        solved_test = not task.test or solves(candidate, task.test)[0]
        return TaskResult(
            task.id, len(train), len(task.test), True, True, (),
            ("initial",), ("initial",) if solved_test else (),
        )
    ex1 = [i for i, f in enumerate(flags) if f]
    outcomes: list[tuple[str, StrategyOutcome]] = []
    solved_train: list[str] = []
    solved: list[str] = []
    for strat in cfg.strategy_order:
        session = Session(gen, budget=cfg.budget, calls=1)
        if strat is Strategy.FORWARD_ALL:
            outcome = strategy_forward_all(train, candidate, session, cfg)
        elif strat is Strategy.FORWARD1:
            outcome = strategy_forward1(train, candidate, session, cfg)
        elif strat is Strategy.BACKWARD1:
            outcome = strategy_backward1(train, candidate, session, cfg)
        else:
            outcome = strategy_if_then_else(train, candidate, ex1, session, cfg)
        outcomes.append((strat.value, outcome))
        if outcome.program is not None and solves(outcome.program, train)[0]:
            solved_train.append(strat.value)
            if not task.test or solves(outcome.program, task.test)[0]:
                solved.append(strat.value)
    return TaskResult(task.id, len(train), len(task.test), True, False,
                      tuple(outcomes), tuple(solved_train), tuple(solved))


def run_benchmark(
    tasks: Sequence[PbeTask], gen: Generator,
    cfg: Optional[PipelineConfig] = None, jobs: int = 1,
    config_echo: Optional[dict] = None,
) -> BenchmarkRun:
    """Run all strategies over a corpus; per-task failures never abort.

    Results keep the corpus order regardless of `jobs`, so reports are
    reproducible under parallelism (given a deterministic generator).
    """
    cfg = cfg or PipelineConfig()
    run = BenchmarkRun(config=dict(config_echo or {}))

    def one(task: PbeTask):
        try:
            return _bench_one(task, gen, cfg)
        except GeneratorUnavailable as exc:
            return ("skip", task.id, f"generator unavailable: {exc}")
        except _BudgetExhausted:
            return TaskResult(task.id, len(task.train), len(task.test),
                              False, False, (), (), (),
                              error="budget exhausted before a candidate")
        except Exception as exc:  # noqa: BLE001 — batch must survive anything
            logger.exception("task %s failed", task.id)
            return TaskResult(task.id, len(task.train), len(task.test),
                              False, False, (), (), (),
                              error=f"{type(exc).__name__}: {exc}")

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            produced = list(pool.map(one, tasks))
    else:
        produced = [one(t) for t in tasks]
    for item in produced:
        if isinstance(item, tuple) and item and item[0] == "skip":
            run.skipped.append((item[1], item[2]))
        else:
            run.results.append(item)
    return run


# --------------------------------------------------------------------------
# reports


def _task_record(res: TaskResult) -> dict:
    record: dict = {
        "task_id": res.task_id,
        "n_train": res.n_train,
        "n_test": res.n_test,
        "initial_parsed": res.initial_parsed,
        "initial_solves_train": res.initial_solves_train,
        "solved_train": list(res.solved_train),
        "solved": list(res.solved),
    }
    if res.error:
        record["error"] = res.error
    strategies = {}
    for name, outcome in res.outcomes:
        strategies[name] = {
            "phase": None if outcome.phase_reached is None
            else int(outcome.phase_reached),
            "generator_calls": outcome.generator_calls,
            "program": None if outcome.program is None
            else pretty(outcome.program),
            "trace": list(outcome.trace),
        }
    record["strategies"] = strategies
    return record


def emit_report(run: BenchmarkRun, fmt: str = "json") -> bytes:
    """Render a run as bytes: stable field order, no timestamps."""
    counters = run.counters()
    if fmt == "json":
        payload = {
            "config": run.config,
            "summary": counters,
            "skipped": [
                {"task_id": tid, "reason": reason}
                for tid, reason in run.skipped
            ],
            "tasks": [_task_record(r) for r in run.results],
        }
        return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode(
            "utf-8"
        )
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([
            "record", "task_id", "strategy", "ph0", "ph1", "ph2", "ph3",
            "pct", "solved", "overfit", "phase", "solved_train",
            "solved_test", "generator_calls",
        ])
        for strat in Strategy:
            counts = counters["per_strategy"][strat.value]
            writer.writerow([
                "summary", "", strat.value, counts["ph0"], counts["ph1"],
                counts["ph2"], counts["ph3"], counts["pct"],
                counts["solved"], counts["overfit"], "", "", "", "",
            ])
        for region, count in counters["venn_regions"].items():
            writer.writerow(["venn", "", region, "", "", "", "", "", count,
                             "", "", "", "", ""])
        writer.writerow(["union", "", "", "", "", "", "", "",
                         counters["union"], "", "", "", "", ""])
        for res in run.results:
            for name, outcome in res.outcomes:
                writer.writerow([
                    "task", res.task_id, name, "", "", "", "", "", "", "",
                    "" if outcome.phase_reached is None
                    else int(outcome.phase_reached),
                    name in res.solved_train, name in res.solved,
                    outcome.generator_calls,
                ])
            if res.initial_solves_train:
                writer.writerow([
                    "task", res.task_id, "initial", "", "", "", "", "", "",
                    "", 3, True, "initial" in res.solved, 1,
                ])
        for tid, reason in run.skipped:
            writer.writerow(["skipped", tid, "", "", "", "", "", "", "", "",
                             "", "", "", reason])
        return buf.getvalue().encode("utf-8")
    raise ValueError(f"unknown report format {fmt!r} (expected json or csv)")
