"""Scripted generator for tests and offline replay.

A transcript is an ordered list of completions; every call to the generator
consumes exactly one entry and pipes its text through the same mining logic
as the live model client (fenced-block extraction, hole-assignment parsing,
drop counting).  An exhausted transcript behaves like an unreachable
endpoint.
"""
from __future__ import annotations

import json
from collections import deque
from pathlib import Path
from typing import Iterable, Sequence, Union

from ..syntax import Program
from ..values import Value
from .base import Generator, GeneratorRequest, GeneratorUnavailable, HoleQuery
from .llm import extract_programs, parse_hole_values

__all__ = ["MockTranscriptGenerator"]

Entry = Union[str, dict]


class MockTranscriptGenerator(Generator):
    name = "mock-transcript"

    def __init__(self, entries: Iterable[Entry]):
        self._queue: deque[str] = deque(
            e["text"] if isinstance(e, dict) else str(e) for e in entries
        )
        self.dropped = 0
        self.calls = 0

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "MockTranscriptGenerator":
        """Load a transcript: a JSON array, or JSONL with one entry per line."""
        text = Path(path).read_text()
        stripped = text.lstrip()
        if stripped.startswith("["):
            return cls(json.loads(text))
        entries = [json.loads(line) for line in text.splitlines() if line.strip()]
        return cls(entries)

    def _next(self) -> str:
        if not self._queue:
            raise GeneratorUnavailable("transcript exhausted")
        self.calls += 1
        return self._queue.popleft()

    def generate(self, request: GeneratorRequest) -> list[Program]:
        programs, dropped = extract_programs(self._next())
        self.dropped += dropped
        return programs[: request.sample_count] if request.sample_count else programs

    def propose_hole_values(
        self,
        suffix,
        queries: Sequence[HoleQuery],
        sample_count: int,
    ) -> list[list[tuple[Value, ...]]]:
        found = parse_hole_values(self._next(), len(suffix.holes))
        return [found.get(i, []) for i in range(len(queries))]
