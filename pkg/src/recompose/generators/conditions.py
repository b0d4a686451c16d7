"""Learning a condition that separates two classes of input states."""
from __future__ import annotations

from typing import Sequence

from ..interp import eval_program
from ..syntax import Program
from ..task import Example
from ..values import Value
from .base import Generator, GeneratorRequest, RequestKind

__all__ = ["ConditionNotFound", "learn_condition"]


class ConditionNotFound(Exception):
    """No proposed condition separated the two classes."""


def learn_condition(
    class1: Sequence[tuple[Value, ...]],
    class2: Sequence[tuple[Value, ...]],
    generator: Generator,
    sample_count: int = 4,
) -> Program:
    """A boolean program that is true on `class1` inputs, false on `class2`.

    The search is phrased as an ordinary synthesis request whose examples
    map each input tuple to its class flag; whatever the generator proposes
    is verified by execution on both classes before being returned.

    Raises:
        ValueError: empty classes or an input tuple in both classes.
        ConditionNotFound: nothing proposed separates the classes.
    """
    if not class1 or not class2:
        raise ValueError("both classes need at least one state")
    overlap = {tuple(map(repr, s)) for s in class1} & {
        tuple(map(repr, s)) for s in class2
    }
    if overlap:
        raise ValueError("the two classes share input states")

    examples = tuple(
        [Example(tuple(s), True) for s in class1]
        + [Example(tuple(s), False) for s in class2]
    )
    request = GeneratorRequest(
        examples=examples,
        kind=RequestKind.CONDITION_SYNTHESIS,
        sample_count=sample_count,
    )
    for prog in generator.generate(request):
        if all(eval_program(prog, s) is True for s in class1) and all(
            eval_program(prog, s) is False for s in class2
        ):
            return prog
    raise ConditionNotFound(
        f"no condition separating {len(class1)} vs {len(class2)} states"
    )
