"""Command-line interface.

Three subcommands:

* ``synth`` — solve one task from a task file and print the program;
* ``bench`` — expand a corpus into train/test splits, drop tasks a bare
  generator already solves, run every recovery strategy on the rest, and
  emit a JSON or CSV report;
* ``explain`` — show how a program would be decomposed (dataflow graph,
  salvageable first step, salvageable final step).

Configuration merges, in increasing precedence: built-in defaults, a JSON
config file (``--config``), ``RECOMPOSE_*`` environment variables, and
command-line flags.  The effective configuration is echoed into every
report so results are self-describing.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
from typing import Optional, Sequence

from .dataflow import UnsupportedShape, build_graph, extract_backward1, extract_forward1
from .generators.base import Generator, GeneratorUnavailable
from .generators.enumerative import EnumerativeGenerator
from .generators.llm import LlmConfig, LlmGenerator
from .generators.mock import MockTranscriptGenerator
from .harness import (
    FormatError, emit_report, filter_easy, load_tasks, make_splits,
    run_benchmark,
)
from .parsing import ParseError, parse, pretty
from .strategies import PipelineConfig, Strategy, Unsolved, solve
from .syntax import InvalidProgram

logger = logging.getLogger(__name__)

__all__ = ["main", "load_config", "build_generator", "DEFAULTS"]

DEFAULTS: dict = {
    "generator": "enumerative",
    "seed": 0,
    "jobs": 1,
    "filter_rounds": 4,
    "transcript": None,
    "prompts_dir": None,
    "pipeline": {
        "strategy_order": [s.value for s in PipelineConfig().strategy_order],
        "recursion_depth": 1,
        "max_prefixes": 1,
        "budget": 6,
        "stop_at_first_success": True,
    },
    "enumerative": {"max_size": 6, "beam": 1000},
    "llm": {
        "endpoint": None,
        "model": None,
        "api_key_env": "RECOMPOSE_API_KEY",
        "timeout": 60.0,
        "retries": 1,
    },
}

# environment variable -> (path into the config dict, parser)
_ENV_OVERRIDES: dict[str, tuple[tuple[str, ...], str]] = {
    "RECOMPOSE_GENERATOR": (("generator",), "str"),
    "RECOMPOSE_SEED": (("seed",), "int"),
    "RECOMPOSE_JOBS": (("jobs",), "int"),
    "RECOMPOSE_FILTER_ROUNDS": (("filter_rounds",), "int"),
    "RECOMPOSE_TRANSCRIPT": (("transcript",), "str"),
    "RECOMPOSE_PROMPTS_DIR": (("prompts_dir",), "str"),
    "RECOMPOSE_STRATEGY_ORDER": (("pipeline", "strategy_order"), "list"),
    "RECOMPOSE_DEPTH": (("pipeline", "recursion_depth"), "int"),
    "RECOMPOSE_MAX_PREFIXES": (("pipeline", "max_prefixes"), "int"),
    "RECOMPOSE_BUDGET": (("pipeline", "budget"), "int"),
    "RECOMPOSE_STOP_AT_FIRST_SUCCESS": (
        ("pipeline", "stop_at_first_success"), "bool"),
    "RECOMPOSE_MAX_SIZE": (("enumerative", "max_size"), "int"),
    "RECOMPOSE_BEAM": (("enumerative", "beam"), "int"),
    "RECOMPOSE_LLM_ENDPOINT": (("llm", "endpoint"), "str"),
    "RECOMPOSE_LLM_MODEL": (("llm", "model"), "str"),
    "RECOMPOSE_LLM_API_KEY_ENV": (("llm", "api_key_env"), "str"),
    "RECOMPOSE_LLM_TIMEOUT": (("llm", "timeout"), "float"),
    "RECOMPOSE_LLM_RETRIES": (("llm", "retries"), "int"),
}


class ConfigError(ValueError):
    pass


def _parse_env(raw: str, kind: str):
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"expected a boolean, got {raw!r}")
    if kind == "list":
        return [part.strip() for part in raw.split(",") if part.strip()]
    return raw


def _deep_merge(base: dict, extra: dict, where: str = "config") -> None:
    for key, value in extra.items():
        if key not in base:
            raise ConfigError(f"unknown {where} key {key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}.{key} must be an object")
            _deep_merge(base[key], value, f"{where}.{key}")
        else:
            base[key] = value


def load_config(path: Optional[str] = None,
                environ: Optional[dict] = None) -> dict:
    """Defaults, then the JSON config file, then RECOMPOSE_* variables."""
    config = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                loaded = json.load(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        _deep_merge(config, loaded)
    env = os.environ if environ is None else environ
    for var, (path_keys, kind) in _ENV_OVERRIDES.items():
        if var not in env:
            continue
        try:
            value = _parse_env(env[var], kind)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"bad value for {var}: {exc}") from None
        target = config
        for key in path_keys[:-1]:
            target = target[key]
        target[path_keys[-1]] = value
    return config


def _apply_flags(config: dict, args: argparse.Namespace) -> None:
    if getattr(args, "generator", None):
        config["generator"] = args.generator
    if getattr(args, "strategy_order", None):
        config["pipeline"]["strategy_order"] = [
            part.strip() for part in args.strategy_order.split(",") if part.strip()
        ]
    if getattr(args, "depth", None) is not None:
        config["pipeline"]["recursion_depth"] = args.depth
    if getattr(args, "budget", None) is not None:
        config["pipeline"]["budget"] = args.budget
    if getattr(args, "jobs", None) is not None:
        config["jobs"] = args.jobs
    if getattr(args, "seed", None) is not None:
        config["seed"] = args.seed
    if getattr(args, "transcript", None):
        config["transcript"] = args.transcript
    if getattr(args, "prompts_dir", None):
        config["prompts_dir"] = args.prompts_dir


def pipeline_config(config: dict) -> PipelineConfig:
    section = config["pipeline"]
    try:
        order = tuple(Strategy(name) for name in section["strategy_order"])
    except ValueError as exc:
        raise ConfigError(f"bad strategy name: {exc}") from None
    try:
        return PipelineConfig(
            strategy_order=order,
            recursion_depth=section["recursion_depth"],
            max_prefixes=section["max_prefixes"],
            budget=section["budget"],
            stop_at_first_success=section["stop_at_first_success"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_generator(config: dict) -> Generator:
    name = config["generator"]
    if name == "enumerative":
        section = config["enumerative"]
        return EnumerativeGenerator(
            max_size=section["max_size"], beam=section["beam"]
        )
    if name == "llm":
        section = config["llm"]
        if not section["endpoint"] or not section["model"]:
            raise ConfigError(
                "the llm generator needs llm.endpoint and llm.model "
                "(config file or RECOMPOSE_LLM_ENDPOINT/RECOMPOSE_LLM_MODEL)"
            )
        return LlmGenerator(LlmConfig(
            endpoint=section["endpoint"],
            model=section["model"],
            api_key_env=section["api_key_env"],
            timeout=section["timeout"],
            retries=section["retries"],
            prompts_dir=config["prompts_dir"],
        ))
    if name == "mock-transcript":
        if not config["transcript"]:
            raise ConfigError(
                "the mock-transcript generator needs --transcript"
            )
        return MockTranscriptGenerator.from_file(config["transcript"])
    raise ConfigError(
        f"unknown generator {name!r} "
        "(expected enumerative, llm, or mock-transcript)"
    )


def _write_out(data: bytes, out: Optional[str]) -> None:
    if out:
        with open(out, "wb") as handle:
            handle.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()


def _pick_task(tasks, task_id: Optional[str]):
    if task_id is not None:
        for task in tasks:
            if task.id == task_id:
                return task
        raise ConfigError(f"no task with id {task_id!r} in the file")
    if len(tasks) != 1:
        raise ConfigError(
            f"task file holds {len(tasks)} tasks; pick one with --task-id"
        )
    return tasks[0]


def cmd_synth(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    _apply_flags(config, args)
    tasks = load_tasks(args.tasks)
    task = _pick_task(tasks, args.task_id)
    generator = build_generator(config)
    cfg = pipeline_config(config)
    try:
        outcome = solve(task, generator, cfg)
    except Unsolved as exc:
        print(f"unsolved: {exc}", file=sys.stderr)
        for failed in exc.outcomes:
            for line in failed.trace:
                print(f"  {line}", file=sys.stderr)
        return 2
    text = pretty(outcome.program)
    strategy = outcome.strategy.value if outcome.strategy else "initial"
    print(text)
    print(f"# strategy={strategy} generator_calls={outcome.generator_calls}",
          file=sys.stderr)
    for line in outcome.trace:
        print(f"# {line}", file=sys.stderr)
    if args.out:
        _write_out((text + "\n").encode("utf-8"), args.out)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    _apply_flags(config, args)
    tasks = load_tasks(args.tasks)
    generator = build_generator(config)
    cfg = pipeline_config(config)
    seed = config["seed"]
    instances = []
    for task in tasks:
        instances.extend(make_splits(task, seed=seed))
    echo = {
        "generator": config["generator"],
        "pipeline": config["pipeline"],
        "enumerative": config["enumerative"],
        "seed": seed,
        "split_family": "leading/trailing 2-7, even-odd, first-half, "
                        "stride-3, random-40, random-60, singleton-first",
        "skip_filter": bool(args.skip_filter),
        "source_tasks": len(tasks),
        "split_instances": len(instances),
    }
    if args.skip_filter:
        hard = instances
        echo["filter"] = None
    else:
        result = filter_easy(instances, generator,
                             rounds=config["filter_rounds"])
        hard = list(result.hard)
        echo["filter"] = {
            "rounds": config["filter_rounds"],
            "easy": len(result.easy),
            "hard": len(result.hard),
            "skipped": [
                {"task_id": tid, "reason": reason}
                for tid, reason in result.skipped
            ],
        }
    run = run_benchmark(hard, generator, cfg, jobs=config["jobs"],
                        config_echo=echo)
    _write_out(emit_report(run, args.format), args.out)
    return 0


def cmd_explain(args: argparse.Namespace) -> int:
    try:
        with open(args.program, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        program = parse(text)
    except (ParseError, InvalidProgram) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 1
    print(f"program: {pretty(program)}")
    try:
        graph = build_graph(program)
    except UnsupportedShape as exc:
        print(f"no decomposition: {exc}")
        return 0
    print()
    print(graph.to_dot())
    print()
    prefixes = extract_forward1(graph)
    if prefixes:
        print("salvageable first steps:")
        for prefix in prefixes:
            print(f"  {prefix.op}: {pretty(prefix.program)}")
    else:
        print("salvageable first steps: none")
    try:
        suffix = extract_backward1(graph)
    except UnsupportedShape as exc:
        print(f"salvageable final step: none ({exc})")
    else:
        print(f"salvageable final step ({len(suffix.holes)} hole(s)): "
              f"{pretty(suffix.program)}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recompose",
        description="Recover working programs from failed synthesis candidates.",
    )
    parser.add_argument("--log-level", default="WARNING",
                        help="logging level (DEBUG, INFO, WARNING, ...)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--generator",
                       choices=["enumerative", "llm", "mock-transcript"])
        p.add_argument("--strategy-order",
                       help="comma-separated strategy names")
        p.add_argument("--depth", type=int, help="subtask recursion depth")
        p.add_argument("--budget", type=int, help="generator calls per task")
        p.add_argument("--seed", type=int, help="seed for the split schemes")
        p.add_argument("--out", help="write output to this file")
        p.add_argument("--transcript", help="scripted replies (JSON/JSONL)")
        p.add_argument("--prompts-dir", help="prompt template directory")

    synth = sub.add_parser("synth", help="solve one task")
    common(synth)
    synth.add_argument("tasks", help="JSONL task file")
    synth.add_argument("--task-id", help="which task to solve")
    synth.set_defaults(func=cmd_synth)

    bench = sub.add_parser("bench", help="run a benchmark corpus")
    common(bench)
    bench.add_argument("tasks", help="JSONL task file")
    bench.add_argument("--jobs", type=int, help="parallel tasks")
    bench.add_argument("--format", choices=["json", "csv"], default="json")
    bench.add_argument("--skip-filter", action="store_true",
                       help="skip the easy-task filter")
    bench.set_defaults(func=cmd_bench)

    explain = sub.add_parser("explain", help="show a program's decomposition")
    explain.add_argument("program", help="file holding one program")
    explain.set_defaults(func=cmd_explain)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (ConfigError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except GeneratorUnavailable as exc:
        print(f"error: generator unavailable: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
