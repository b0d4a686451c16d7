"""Benchmark harness: task files, splits, the easy filter, runs, reports."""
import json

import pytest

from recompose.generators.base import GeneratorUnavailable
from recompose.generators.mock import MockTranscriptGenerator
from recompose.harness import (
    BenchmarkRun,
    FormatError,
    default_schemes,
    dump_tasks,
    emit_report,
    filter_easy,
    load_tasks,
    make_splits,
    run_benchmark,
)
from recompose.strategies import PipelineConfig
from recompose.task import Example, PbeTask

from helpers import F1_TEXT, FIG1_ROWS, FWDALL_REST_TEXT, fig1_task


GOOD_FIG1 = ('fn(x0) { let v1 = index(split(x0, ", "), 0); '
             'let v2 = join(" ", slice(split(x0, " "), -2, none)); '
             'return concat(v1, ", ", v2) }')


def fenced(text):
    return f"```\n{text}\n```"


def write_tasks(tmp_path, lines, name="tasks.jsonl"):
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def eight_row_task(id="wide"):
    rows = [(f"u{i}@host{i}.example", f"u{i}") for i in range(8)]
    examples = tuple(Example((i,), o) for i, o in rows)
    return PbeTask(id=id, examples=examples,
                   train_ids=tuple(range(8)), test_ids=())


class TestLoadTasks:
    def test_round_trip(self, tmp_path, fig1):
        path = tmp_path / "t.jsonl"
        path.write_text(dump_tasks([fig1]))
        [back] = load_tasks(str(path))
        assert back == fig1

    def test_blank_lines_are_skipped(self, tmp_path, fig1):
        text = dump_tasks([fig1])
        path = tmp_path / "t.jsonl"
        path.write_text("\n" + text + "\n\n")
        assert len(load_tasks(str(path))) == 1

    def test_train_test_ids_round_trip(self, tmp_path):
        task = PbeTask(id="s", examples=(
            Example(("a",), "A"), Example(("b",), "B"), Example(("c",), "C")),
            train_ids=(0, 2), test_ids=(1,))
        path = tmp_path / "t.jsonl"
        path.write_text(dump_tasks([task]))
        [back] = load_tasks(str(path))
        assert back.train_ids == (0, 2)
        assert back.test_ids == (1,)

    def test_invalid_json_names_the_line(self, tmp_path, fig1):
        path = write_tasks(tmp_path, [dump_tasks([fig1]).strip(), "{oops"])
        with pytest.raises(FormatError, match="line 2"):
            load_tasks(path)

    def test_duplicate_ids_rejected(self, tmp_path, fig1):
        line = dump_tasks([fig1]).strip()
        path = write_tasks(tmp_path, [line, line])
        with pytest.raises(FormatError, match="duplicate task id"):
            load_tasks(path)

    def test_mixed_arity_rejected(self, tmp_path):
        obj = {"id": "bad", "examples": [
            {"inputs": ["a"], "output": "x"},
            {"inputs": ["a", "b"], "output": "y"},
        ]}
        path = write_tasks(tmp_path, [json.dumps(obj)])
        with pytest.raises(FormatError, match="line 1"):
            load_tasks(path)

    def test_unsupported_value_rejected(self, tmp_path):
        obj = {"id": "bad", "examples": [{"inputs": [1.5], "output": "x"}]}
        path = write_tasks(tmp_path, [json.dumps(obj)])
        with pytest.raises(FormatError):
            load_tasks(path)

    def test_missing_id_rejected(self, tmp_path):
        obj = {"examples": [{"inputs": ["a"], "output": "b"}]}
        path = write_tasks(tmp_path, [json.dumps(obj)])
        with pytest.raises(FormatError, match="task id"):
            load_tasks(path)

    def test_empty_examples_rejected(self, tmp_path):
        path = write_tasks(tmp_path, [json.dumps({"id": "e", "examples": []})])
        with pytest.raises(FormatError, match="examples"):
            load_tasks(path)


class TestSplits:
    def test_eighteen_schemes_on_a_wide_task(self):
        splits = make_splits(eight_row_task())
        assert len(splits) == 18
        assert len({s.id for s in splits}) == 18

    def test_split_ids_extend_the_task_id(self):
        for s in make_splits(eight_row_task(id="wide")):
            assert s.id.startswith("wide#")

    def test_small_tasks_skip_inapplicable_schemes(self, fig1):
        # 4 examples: leading/trailing k>=4 would leave no test rows
        splits = make_splits(fig1)
        assert len(splits) == 10

    def test_each_split_partitions_the_examples(self):
        task = eight_row_task()
        for s in make_splits(task):
            train, test = set(s.train_ids), set(s.test_ids)
            assert train and test
            assert train | test == set(range(8))
            assert not (train & test)
            assert s.examples == task.examples

    def test_deterministic_for_a_fixed_seed(self):
        a = [(s.id, s.train_ids) for s in make_splits(eight_row_task(), seed=7)]
        b = [(s.id, s.train_ids) for s in make_splits(eight_row_task(), seed=7)]
        assert a == b

    def test_seed_moves_only_the_random_schemes(self):
        by_id = lambda splits: {s.id: s.train_ids for s in splits}
        a = by_id(make_splits(eight_row_task(), seed=0))
        b = by_id(make_splits(eight_row_task(), seed=1))
        fixed = [k for k in a if "random" not in k]
        assert all(a[k] == b[k] for k in fixed)
        assert any(a[k] != b[k] for k in a if "random" in k)

    def test_random_schemes_differ_across_task_ids(self):
        a = {s.id.split("#")[1]: s.train_ids
             for s in make_splits(eight_row_task(id="one"))}
        b = {s.id.split("#")[1]: s.train_ids
             for s in make_splits(eight_row_task(id="two"))}
        assert any(a[k] != b[k] for k in a if "random" in k)

    def test_scheme_names_are_distinct(self):
        names = [s.name for s in default_schemes()]
        assert len(set(names)) == len(names)


class TestFilterEasy:
    def ref_task(self, id):
        examples = tuple(Example((i,), o) for i, o in FIG1_ROWS)
        return PbeTask(id=id, examples=examples,
                       train_ids=(0, 1), test_ids=(2, 3))

    def test_task_solved_by_plain_retry_is_easy(self):
        gen = MockTranscriptGenerator([fenced(GOOD_FIG1)])
        res = filter_easy([self.ref_task("a")], gen, rounds=2)
        assert [t.id for t in res.easy] == ["a"]
        assert res.hard == () and res.skipped == ()

    def test_solving_train_but_failing_test_stays_hard(self):
        # overfit to the two train rows: right prefix, wrong tail rule
        overfit = ('fn(x0) { return concat(index(split(x0, ", "), 0), '
                   '", ", index(split(x0, " "), -1)) }')
        gen = MockTranscriptGenerator([fenced(overfit)] * 3)
        res = filter_easy([self.ref_task("b")], gen, rounds=2)
        assert [t.id for t in res.hard] == ["b"]

    def test_retry_budget_respected_before_giving_up(self):
        gen = MockTranscriptGenerator(
            [fenced('fn(x0) { return upper(x0) }')] * 10)
        res = filter_easy([self.ref_task("c")], gen, rounds=2)
        assert [t.id for t in res.hard] == ["c"]
        assert gen.calls == 3  # first try + two retries

    def test_generator_outage_marks_skipped(self):
        gen = MockTranscriptGenerator([])  # exhausts immediately
        res = filter_easy([self.ref_task("d")], gen, rounds=2)
        assert [task_id for task_id, _ in res.skipped] == ["d"]
        assert "exhausted" in res.skipped[0][1]
        assert res.easy == () and res.hard == ()

    def test_mixed_corpus_keeps_order_within_each_bucket(self):
        tasks = [self.ref_task("t1"), self.ref_task("t2")]
        gen = MockTranscriptGenerator(
            [fenced(GOOD_FIG1),                       # t1 solved at once
             fenced('fn(x0) { return x0 }')] * 4)     # t2 never
        res = filter_easy(tasks, gen, rounds=0)
        assert [t.id for t in res.easy] == ["t1"]
        assert [t.id for t in res.hard] == ["t2"]


def scripted_run(tasks, script, cfg=None, jobs=1):
    gen = MockTranscriptGenerator(script)
    return run_benchmark(tasks, gen, cfg or PipelineConfig(), jobs=jobs,
                         config_echo={"generator": {"kind": "mock"}})


class TestRunBenchmark:
    def split_fig1(self):
        examples = tuple(Example((i,), o) for i, o in FIG1_ROWS)
        return PbeTask(id="addr#lead3", examples=examples,
                       train_ids=(0, 1, 2), test_ids=(3,))

    def test_initial_solver_short_circuits_strategies(self):
        # one shared initial call, then each strategy session replays it
        run = scripted_run([self.split_fig1()], [fenced(GOOD_FIG1)])
        [res] = run.results
        assert res.initial_parsed and res.initial_solves_train
        assert res.solved
        c = run.counters()
        assert c["initial_solved"] == 1
        assert c["tasks_run"] == 1

    def test_unsalvageable_task_counts_phases(self):
        run = scripted_run(
            [self.split_fig1()],
            [fenced('fn(x0) { return x0 }')] + ["no code"] * 8)
        [res] = run.results
        assert res.initial_parsed and not res.initial_solves_train
        assert not res.solved
        c = run.counters()
        per = c["per_strategy"]
        assert per["forward1"]["ph1"] == 0  # identity has no usable prefix
        assert per["forward_all"]["ph2"] == 1
        assert c["union"] == 0

    def test_recovered_task_updates_venn_and_union(self):
        # scripted wrong candidate, then the whole-candidate subtask answer
        task = self.split_fig1()
        script = (
            [fenced(F1_TEXT)]
            + [fenced(FWDALL_REST_TEXT)]  # forward_all session: solved
            + ["no code"] * 6             # remaining sessions find nothing
        )
        run = scripted_run([task], script)
        c = run.counters()
        assert c["per_strategy"]["forward_all"]["solved"] == 1
        assert c["venn_regions"]["forward_all_only"] == 1
        assert c["union"] == 1
        assert c["any_strategy"] == 1

    def test_task_errors_are_recorded_not_raised(self):
        class Exploding:
            name = "exploding"

            def generate(self, request):
                raise RuntimeError("boom")

            def propose_hole_values(self, suffix, queries, sample_count):
                raise RuntimeError("boom")

        run = run_benchmark([self.split_fig1()], Exploding(),
                            PipelineConfig())
        [res] = run.results
        assert res.error == "RuntimeError: boom"
        assert not res.solved

    def test_generator_outage_skips_the_task(self):
        run = scripted_run([self.split_fig1()], [])  # transcript exhausted
        assert run.results == []
        [(task_id, reason)] = run.skipped
        assert task_id == "addr#lead3"
        assert "unavailable" in reason
        assert run.counters()["tasks_skipped"] == 1

    def test_corpus_order_is_preserved_under_parallelism(self):
        tasks = []
        for i in range(6):
            examples = tuple(Example((f"u{j}-{i}",), f"u{j}".upper())
                             for j in range(3))
            tasks.append(PbeTask(id=f"t{i}", examples=examples,
                                 train_ids=(0, 1), test_ids=(2,)))
        script = [fenced('fn(x0) { return upper(index(split(x0, "-"), 0)) }')] * 40
        serial = scripted_run(tasks, script)
        threaded = scripted_run(tasks, script, jobs=4)
        assert [r.task_id for r in serial.results] == [t.id for t in tasks]
        assert [r.task_id for r in threaded.results] == [t.id for t in tasks]


class TestCounters:
    def test_percent_recovered_is_anchored_to_attempts(self):
        # a strategy that reaches its salvage point 221 times and composes
        # 25 programs reports 11.3% — checked with hand-built results
        from recompose.harness import TaskResult
        from recompose.strategies import Phase, Strategy, StrategyOutcome

        def fake(i, phase):
            outcome = StrategyOutcome(
                strategy=Strategy.FORWARD1, phase_reached=phase,
                program=None, generator_calls=0, trace=())
            return TaskResult(
                task_id=f"f{i}", n_train=2, n_test=0, initial_parsed=True,
                initial_solves_train=False,
                outcomes=(("forward1", outcome),),
                solved_train=(), solved=(), error=None)

        results = [fake(i, Phase.PH3) for i in range(25)]
        results += [fake(25 + i, Phase.PH1) for i in range(221 - 25)]
        run = BenchmarkRun(config={}, results=tuple(results), skipped=())
        f1 = run.counters()["per_strategy"]["forward1"]
        assert f1["ph1"] == 221
        assert f1["ph3"] == 25
        assert abs(f1["pct"] - 11.3) < 0.05

    def test_venn_regions_sum_to_union(self):
        from recompose.harness import TaskResult
        from recompose.strategies import Phase, Strategy, StrategyOutcome

        def result(i, winners):
            outcomes = []
            for s in (Strategy.FORWARD_ALL, Strategy.FORWARD1,
                      Strategy.BACKWARD1):
                won = s.value in winners
                outcomes.append((s.value, StrategyOutcome(
                    strategy=s,
                    phase_reached=Phase.PH3 if won else Phase.PH0,
                    program=None, generator_calls=0, trace=())))
            return TaskResult(
                task_id=f"v{i}", n_train=2, n_test=0, initial_parsed=True,
                initial_solves_train=False, outcomes=tuple(outcomes),
                solved_train=tuple(winners), solved=tuple(winners),
                error=None)

        combos = [("forward_all",), ("forward1",), ("backward1",),
                  ("forward_all", "forward1"), ("forward_all", "backward1"),
                  ("forward1", "backward1"),
                  ("forward_all", "forward1", "backward1"), ()]
        results = tuple(result(i, w) for i, w in enumerate(combos))
        c = BenchmarkRun(config={}, results=results, skipped=()).counters()
        regions = c["venn_regions"]
        assert sum(regions.values()) == c["union"] == 7
        assert regions["all_three"] == 1
        assert regions["forward_all_only"] == 1
        assert regions["forward1_and_backward1"] == 1

    def test_overfit_counts_train_only_wins(self):
        from recompose.harness import TaskResult
        from recompose.strategies import Phase, Strategy, StrategyOutcome
        outcome = StrategyOutcome(
            strategy=Strategy.BACKWARD1, phase_reached=Phase.PH3,
            program=None, generator_calls=0, trace=())
        res = TaskResult(
            task_id="o", n_train=2, n_test=1, initial_parsed=True,
            initial_solves_train=False,
            outcomes=(("backward1", outcome),),
            solved_train=("backward1",), solved=(), error=None)
        c = BenchmarkRun(config={}, results=(res,), skipped=()).counters()
        assert c["per_strategy"]["backward1"]["overfit"] == 1
        assert c["per_strategy"]["backward1"]["solved"] == 0


class TestReports:
    def run_once(self, jobs=1):
        examples = tuple(Example((i,), o) for i, o in FIG1_ROWS)
        tasks = [
            PbeTask(id="a#x", examples=examples, train_ids=(0, 1, 2),
                    test_ids=(3,)),
            PbeTask(id="b#y", examples=examples, train_ids=(0, 1),
                    test_ids=(2, 3)),
        ]
        script = [fenced(GOOD_FIG1)] * 2
        return scripted_run(tasks, script, jobs=jobs)

    def test_json_report_is_byte_deterministic(self):
        a = emit_report(self.run_once(), "json")
        b = emit_report(self.run_once(), "json")
        assert a == b

    def test_parallelism_does_not_change_the_bytes(self):
        assert emit_report(self.run_once(jobs=1), "json") == \
            emit_report(self.run_once(jobs=4), "json")

    def test_json_shape(self):
        doc = json.loads(emit_report(self.run_once(), "json"))
        assert set(doc) >= {"config", "summary", "tasks"}
        assert doc["summary"]["tasks_run"] == 2
        assert {t["task_id"] for t in doc["tasks"]} == {"a#x", "b#y"}
        for t in doc["tasks"]:
            assert {"task_id", "solved", "strategies"} <= set(t)

    def test_json_report_has_no_timestamps(self):
        text = emit_report(self.run_once(), "json").decode()
        assert "time" not in text.lower()
        assert "date" not in text.lower()

    def test_csv_header_and_row_types(self):
        lines = emit_report(self.run_once(), "csv").decode().splitlines()
        assert lines[0] == ("record,task_id,strategy,ph0,ph1,ph2,ph3,pct,"
                            "solved,overfit,phase,solved_train,solved_test,"
                            "generator_calls")
        kinds = {line.split(",")[0] for line in lines[1:]}
        assert "summary" in kinds
        assert "task" in kinds
        assert "venn" in kinds
        assert "union" in kinds

    def test_csv_is_deterministic(self):
        assert emit_report(self.run_once(), "csv") == \
            emit_report(self.run_once(), "csv")

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError):
            emit_report(self.run_once(), "xml")
