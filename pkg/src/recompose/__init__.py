"""Recover working programs from failed synthesis candidates.

Given input/output examples and a candidate program that does not satisfy
them, the pipeline salvages the candidate's useful fragments (whole body,
first step, final step, or the examples it already handles), turns the
rest into simpler subtasks for a pluggable program generator, and composes
a program that is re-verified against every example before being returned.
"""

from .estimator import ProgramSynthesizer
from .generators import (
    EnumerativeGenerator, Generator, GeneratorRequest, GeneratorUnavailable,
    LlmConfig, LlmGenerator, MockTranscriptGenerator, RequestKind,
)
from .harness import (
    FormatError, default_schemes, emit_report, filter_easy, load_tasks,
    make_splits, run_benchmark,
)
from .interp import eval_program, solves
from .parsing import ParseError, parse, pretty
from .strategies import (
    ArityMismatch, Phase, PipelineConfig, Strategy, StrategyOutcome, Unsolved,
    compose_ite, compose_sequential, self_reflect, solve,
)
from .syntax import InvalidProgram, Program
from .task import Example, InvalidTask, PbeTask, make_task
from .values import Bottom, is_bottom, render_value, values_equal

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # values and tasks
    "Bottom", "is_bottom", "values_equal", "render_value",
    "Example", "PbeTask", "make_task", "InvalidTask",
    # language
    "Program", "InvalidProgram", "parse", "pretty", "ParseError",
    "eval_program", "solves",
    # pipeline
    "Strategy", "Phase", "PipelineConfig", "StrategyOutcome", "Unsolved",
    "ArityMismatch", "solve", "self_reflect",
    "compose_sequential", "compose_ite",
    # generators
    "Generator", "GeneratorRequest", "GeneratorUnavailable", "RequestKind",
    "EnumerativeGenerator", "LlmGenerator", "LlmConfig",
    "MockTranscriptGenerator",
    # benchmarking
    "load_tasks", "make_splits", "default_schemes", "filter_easy",
    "run_benchmark", "emit_report", "FormatError",
    # estimator facade
    "ProgramSynthesizer",
]
