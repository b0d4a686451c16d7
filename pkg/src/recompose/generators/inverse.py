"""Inverse evaluation of a salvaged suffix.

Given the last operation of a failed program (abstracted over holes) and the
outputs it should produce, ask a generator for candidate hole values and
keep, per output, the first candidate that actually evaluates forward to
that output.  Nothing a generator says is trusted: an assignment exists in
the result only if :func:`verify_backprop` accepted it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..dataflow import SuffixProgram
from ..interp import eval_program
from ..values import Value, values_equal
from .base import Generator, HoleQuery

__all__ = [
    "BACKPROP_SAMPLES", "BACKPROP_TEMPERATURE",
    "BackpropQuery", "HoleAssignment", "BackpropFailed",
    "backprop", "verify_backprop",
]

BACKPROP_SAMPLES = 4
BACKPROP_TEMPERATURE = 0.4


@dataclass(frozen=True)
class BackpropQuery:
    suffix: SuffixProgram
    queries: tuple[HoleQuery, ...]
    sample_count: int = BACKPROP_SAMPLES


@dataclass(frozen=True)
class HoleAssignment:
    """Verified hole values, one tuple per queried output."""

    values: tuple[tuple[Value, ...], ...]
    verified: bool = True


class BackpropFailed(Exception):
    """No verified hole values for some outputs (their indices attached)."""

    def __init__(self, missing: Sequence[int]):
        self.missing = tuple(missing)
        super().__init__(f"no verified hole values for outputs {self.missing}")


def verify_backprop(
    suffix: SuffixProgram, holes: Sequence[Value], expected: Value
) -> bool:
    """Does the suffix map these hole values to the expected output?"""
    return values_equal(eval_program(suffix.program, tuple(holes)), expected)


def backprop(query: BackpropQuery, generator: Generator) -> HoleAssignment:
    """Find verified hole values for every output of `query`.

    One generator round answers all outputs.  Raises
    :class:`BackpropFailed` listing the outputs that could not be inverted.
    """
    batches = generator.propose_hole_values(
        query.suffix, query.queries, query.sample_count
    )
    n_holes = len(query.suffix.holes)
    chosen: list[tuple[Value, ...]] = []
    missing: list[int] = []
    for i, q in enumerate(query.queries):
        candidates = batches[i] if i < len(batches) else []
        picked = None
        for cand in candidates:
            if len(cand) == n_holes and verify_backprop(query.suffix, cand, q.output):
                picked = tuple(cand)
                break
        if picked is None:
            missing.append(i)
        else:
            chosen.append(picked)
    if missing:
        raise BackpropFailed(missing)
    return HoleAssignment(tuple(chosen))
