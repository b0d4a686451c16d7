"""Programming-by-example tasks: examples and train/test partitions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .values import Value, is_bottom

__all__ = ["Example", "PbeTask", "InvalidTask", "make_task", "check_examples"]


class InvalidTask(ValueError):
    """The example set violates a task invariant."""


@dataclass(frozen=True)
class Example:
    """One observation: a tuple of input values and the expected output."""

    inputs: tuple[Value, ...]
    output: Value


@dataclass(frozen=True)
class PbeTask:
    """A named example set, optionally split into train and test rows."""

    id: str
    examples: tuple[Example, ...]
    train_ids: tuple[int, ...]
    test_ids: tuple[int, ...]

    @property
    def arity(self) -> int:
        return len(self.examples[0].inputs)

    @property
    def train(self) -> tuple[Example, ...]:
        return tuple(self.examples[i] for i in self.train_ids)

    @property
    def test(self) -> tuple[Example, ...]:
        return tuple(self.examples[i] for i in self.test_ids)


def check_examples(examples: Sequence[Example]) -> None:
    """Validate a raw example sequence: non-empty, uniform arity, no failures."""
    if not examples:
        raise InvalidTask("a task needs at least one example")
    arity = len(examples[0].inputs)
    if arity < 1:
        raise InvalidTask("examples need at least one input")
    for k, ex in enumerate(examples):
        if len(ex.inputs) != arity:
            raise InvalidTask(
                f"example {k} has {len(ex.inputs)} inputs, expected {arity}"
            )
        if any(is_bottom(v) for v in ex.inputs) or is_bottom(ex.output):
            raise InvalidTask(f"example {k} contains a failure value")


def make_task(
    task_id: str,
    examples: Iterable[Example],
    train_ids: Optional[Sequence[int]] = None,
    test_ids: Optional[Sequence[int]] = None,
) -> PbeTask:
    """Build a validated task.

    With no explicit split, every example is a training row.  With only
    `train_ids` given, the remaining rows become the test set.  Explicit
    sets must be disjoint and cover all examples.
    """
    exs = tuple(examples)
    check_examples(exs)
    n = len(exs)
    if train_ids is None and test_ids is None:
        tr: tuple[int, ...] = tuple(range(n))
        te: tuple[int, ...] = ()
    elif train_ids is not None and test_ids is None:
        tr = tuple(train_ids)
        te = tuple(i for i in range(n) if i not in set(tr))
    elif train_ids is None:
        te = tuple(test_ids)  # type: ignore[arg-type]
        tr = tuple(i for i in range(n) if i not in set(te))
    else:
        tr, te = tuple(train_ids), tuple(test_ids)
    for i in (*tr, *te):
        if not 0 <= i < n:
            raise InvalidTask(f"split index {i} out of range")
    if set(tr) & set(te):
        raise InvalidTask("train and test rows overlap")
    if set(tr) | set(te) != set(range(n)):
        raise InvalidTask("train and test rows must cover all examples")
    if not tr:
        raise InvalidTask("the training set is empty")
    return PbeTask(task_id, exs, tr, te)
