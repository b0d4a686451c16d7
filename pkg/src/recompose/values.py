"""Runtime values of the string-transformation language.

Values are plain Python data: ``str``, ``int``, ``bool``, ``list`` and
``tuple`` (both holding values recursively), plus :class:`Bottom`, the
explicit failure value.  Bottom carries a human-readable reason, never nests
inside another value, and compares equal to nothing — including another
Bottom.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

__all__ = [
    "Bottom",
    "Value",
    "is_bottom",
    "values_equal",
    "value_to_json",
    "value_from_json",
    "render_value",
]


@dataclass(frozen=True)
class Bottom:
    """Failure result of an evaluation, with the reason it occurred."""

    reason: str

    def __repr__(self) -> str:
        return f"Bottom({self.reason!r})"


Value = Union[str, int, bool, list, tuple, Bottom]


def is_bottom(v: Value) -> bool:
    return isinstance(v, Bottom)


def values_equal(a: Value, b: Value) -> bool:
    """Structural equality. Bottom is unequal to everything.

    Unlike Python ``==``, booleans and integers are distinct
    (``values_equal(True, 1)`` is False), and lists never equal tuples.
    """
    if isinstance(a, Bottom) or isinstance(b, Bottom):
        return False
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a is b
    if isinstance(a, (list, tuple)) or isinstance(b, (list, tuple)):
        if type(a) is not type(b) or len(a) != len(b):  # type: ignore[arg-type]
            return False
        return all(values_equal(x, y) for x, y in zip(a, b))
    if type(a) is not type(b):
        return False
    return a == b


def value_to_json(v: Value):
    """Convert a non-Bottom value to its JSON-serializable form."""
    if isinstance(v, Bottom):
        raise ValueError(f"cannot serialize a failure value: {v!r}")
    if isinstance(v, (list, tuple)):
        return [value_to_json(x) for x in v]
    if isinstance(v, (str, int, bool)):
        return v
    raise ValueError(f"not a language value: {v!r}")


def value_from_json(raw) -> Value:
    """Read a value from parsed JSON; arrays become lists."""
    if isinstance(raw, bool) or isinstance(raw, int) or isinstance(raw, str):
        return raw
    if isinstance(raw, list):
        return [value_from_json(x) for x in raw]
    raise ValueError(f"unsupported value in task data: {raw!r}")


def render_value(v: Value) -> str:
    """Compact single-line rendering used in traces and prompts."""
    if isinstance(v, Bottom):
        return f"<bottom: {v.reason}>"
    return json.dumps(value_to_json(v), ensure_ascii=False)
