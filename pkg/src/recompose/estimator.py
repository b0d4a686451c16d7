"""Estimator facade over the synthesis pipeline.

`ProgramSynthesizer` learns an executable string-manipulation program from
(inputs, outputs) rows and then applies it to new inputs — the familiar
``fit`` / ``predict`` shape, so it drops into pipelines, grid searches, and
anything else that speaks the scikit-learn estimator protocol.
"""
from __future__ import annotations

from typing import Any, Optional, Sequence

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .generators.base import Generator
from .generators.enumerative import EnumerativeGenerator
from .interp import eval_program
from .parsing import pretty
from .strategies import (
    DEFAULT_ORDER, PipelineConfig, Strategy, solve,
)
from .task import make_task
from .validation import check_X, check_X_y
from .values import Value, values_equal

__all__ = ["ProgramSynthesizer"]


class ProgramSynthesizer(BaseEstimator):
    """Learn a program from example rows; apply it with `predict`.

    Parameters mirror the pipeline configuration.  `generator` is either
    the string ``"enumerative"`` or any object implementing the generator
    protocol (e.g. an LLM-backed one); `strategy_order` is a sequence of
    strategy names or None for the default order.

    After `fit`, `program_` holds the learned program, `program_text_` its
    canonical source, and `outcome_` the full pipeline outcome.  `fit`
    raises `Unsolved` when no strategy recovers a program within budget.
    """

    def __init__(
        self,
        generator: "str | Generator" = "enumerative",
        strategy_order: Optional[Sequence[str]] = None,
        recursion_depth: int = 1,
        max_prefixes: int = 1,
        budget: int = 6,
        stop_at_first_success: bool = True,
        max_size: int = 6,
        beam: int = 1000,
    ):
        self.generator = generator
        self.strategy_order = strategy_order
        self.recursion_depth = recursion_depth
        self.max_prefixes = max_prefixes
        self.budget = budget
        self.stop_at_first_success = stop_at_first_success
        self.max_size = max_size
        self.beam = beam

    def _resolve_generator(self) -> Generator:
        if isinstance(self.generator, str):
            if self.generator != "enumerative":
                raise ValueError(
                    f"unknown generator {self.generator!r}; pass "
                    "'enumerative' or a generator instance"
                )
            return EnumerativeGenerator(max_size=self.max_size, beam=self.beam)
        return self.generator

    def _config(self) -> PipelineConfig:
        if self.strategy_order is None:
            order = DEFAULT_ORDER
        else:
            order = tuple(Strategy(name) for name in self.strategy_order)
        return PipelineConfig(
            strategy_order=order,
            recursion_depth=self.recursion_depth,
            max_prefixes=self.max_prefixes,
            budget=self.budget,
            stop_at_first_success=self.stop_at_first_success,
        )

    def fit(self, X: Sequence[Any], y: Sequence[Any]) -> "ProgramSynthesizer":
        examples = check_X_y(X, y)
        task = make_task("fit", examples)
        outcome = solve(task, self._resolve_generator(), self._config())
        self.outcome_ = outcome
        self.program_ = outcome.program
        self.program_text_ = pretty(outcome.program)
        self.n_features_in_ = task.arity
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "program_"):
            raise NotFittedError(
                "This ProgramSynthesizer instance is not fitted yet. "
                "Call 'fit' with appropriate arguments first."
            )

    def predict(self, X: Sequence[Any]) -> list[Value]:
        """Run the learned program on each row.

        A row the program cannot handle yields a failure value (inspect
        with `recompose.is_bottom`) rather than raising.
        """
        self._check_fitted()
        rows = check_X(X)
        for i, row in enumerate(rows):
            if len(row) != self.n_features_in_:
                raise ValueError(
                    f"X[{i}] has {len(row)} inputs; the fitted program "
                    f"takes {self.n_features_in_}"
                )
        return [eval_program(self.program_, row) for row in rows]

    def score(self, X: Sequence[Any], y: Sequence[Any]) -> float:
        """Exact-match accuracy of the learned program on (X, y)."""
        self._check_fitted()
        examples = check_X_y(X, y)
        got = self.predict([ex.inputs for ex in examples])
        hits = sum(
            1 for g, ex in zip(got, examples) if values_equal(g, ex.output)
        )
        return hits / len(examples)
