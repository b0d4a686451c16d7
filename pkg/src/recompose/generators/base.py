"""Program-generator interface.

A generator is the pluggable "guesser" of the engine: given examples it
proposes candidate programs, and given a suffix with holes it proposes hole
values.  Implementations never have to be trusted — every proposal is
re-verified by execution before it is used — so a generator may be an exact
enumerative search, a language model behind an HTTP endpoint, or a scripted
transcript in tests.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Optional, Sequence

from ..syntax import Program
from ..task import Example
from ..values import Value

if TYPE_CHECKING:  # pragma: no cover
    from ..dataflow import SuffixProgram

__all__ = [
    "RequestKind", "GeneratorRequest", "Generator", "GeneratorUnavailable",
    "HoleQuery",
]


class RequestKind(Enum):
    INITIAL_SYNTHESIS = "initial_synthesis"
    SUBTASK_SYNTHESIS = "subtask_synthesis"
    CONDITION_SYNTHESIS = "condition_synthesis"


class GeneratorUnavailable(Exception):
    """The generator cannot respond at all (transport failure, exhausted script)."""


@dataclass(frozen=True)
class GeneratorRequest:
    """One synthesis query.

    Args:
        examples: the observations the produced programs should satisfy.
        kind: what the caller is synthesizing (fresh program, subtask
            program, or a boolean-returning condition).
        context: optional free-text carried into the prompt, e.g. a failed
            attempt plus the reason it failed.
        sample_count: how many candidates to request (>= 1).
        temperature: sampling temperature in [0, 1]; ignored by exact
            generators.
    """

    examples: tuple[Example, ...]
    kind: RequestKind
    context: Optional[str] = None
    sample_count: int = 1
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if not self.examples:
            raise ValueError("a generator request needs at least one example")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if not 0.0 <= self.temperature <= 1.0:
            raise ValueError("temperature must be within [0, 1]")


@dataclass(frozen=True)
class HoleQuery:
    """One output to invert: the expected value and the example's inputs as hints."""

    output: Value
    hints: tuple[Value, ...] = ()


class Generator(ABC):
    """Produces candidate programs and candidate hole values."""

    name: str = "generator"

    @abstractmethod
    def generate(self, request: GeneratorRequest) -> list[Program]:
        """Candidate programs for `request`; unparseable proposals are dropped.

        Returns possibly empty list; raises :class:`GeneratorUnavailable`
        only when no response could be obtained at all.
        """

    @abstractmethod
    def propose_hole_values(
        self,
        suffix: "SuffixProgram",
        queries: Sequence[HoleQuery],
        sample_count: int,
    ) -> list[list[tuple[Value, ...]]]:
        """Per query, candidate hole-value tuples (callers verify them)."""
