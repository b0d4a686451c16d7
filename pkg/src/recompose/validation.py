"""Input checking for the estimator facade.

The engine's values are strings, integers, booleans, and nested lists of
those — not numeric matrices — so the usual array validators do not apply.
These helpers normalize user-supplied X/y into validated example rows and
raise early, specific errors instead of letting bad shapes surface deep in
the interpreter.
"""
from __future__ import annotations

from typing import Any, Sequence

from .task import Example, check_examples
from .values import Value

__all__ = ["ensure_value", "check_X", "check_X_y"]


def ensure_value(obj: Any, where: str) -> Value:
    """Coerce one user-supplied object to an engine value.

    Accepts str, bool, int, and (possibly nested) lists/tuples of values;
    everything else — floats, None, dicts, numpy arrays — is rejected with
    a message naming the offending position.
    """
    if isinstance(obj, bool) or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, (list, tuple)):
        return type(obj)(ensure_value(v, where) for v in obj)
    # numpy scalars quack like their Python counterparts via .item()
    item = getattr(obj, "item", None)
    if callable(item):
        try:
            return ensure_value(item(), where)
        except (TypeError, ValueError):
            pass
    raise TypeError(
        f"{where}: unsupported value of type {type(obj).__name__!r} "
        "(expected str, int, bool, or a list of those)"
    )


def _row_inputs(row: Any, index: int) -> tuple[Value, ...]:
    # a bare string/int/bool row is a single-input example, not a sequence
    if isinstance(row, (str, int, bool)):
        return (ensure_value(row, f"X[{index}]"),)
    if isinstance(row, (list, tuple)):
        if not row:
            raise ValueError(f"X[{index}] is empty; every row needs inputs")
        return tuple(
            ensure_value(v, f"X[{index}][{j}]") for j, v in enumerate(row)
        )
    item = getattr(row, "item", None)
    if callable(item):
        return (ensure_value(row, f"X[{index}]"),)
    raise TypeError(
        f"X[{index}]: expected a value or a sequence of values, "
        f"got {type(row).__name__!r}"
    )


def check_X(X: Sequence[Any]) -> list[tuple[Value, ...]]:
    """Normalize X into a list of input tuples of uniform arity."""
    rows = [_row_inputs(row, i) for i, row in enumerate(X)]
    if not rows:
        raise ValueError("X must contain at least one row")
    arity = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != arity:
            raise ValueError(
                f"X[{i}] has {len(row)} inputs but X[0] has {arity}"
            )
    return rows


def check_X_y(X: Sequence[Any], y: Sequence[Any]) -> list[Example]:
    """Normalize (X, y) into validated examples."""
    rows = [_row_inputs(row, i) for i, row in enumerate(X)]
    outputs = [ensure_value(v, f"y[{i}]") for i, v in enumerate(y)]
    if len(rows) != len(outputs):
        raise ValueError(
            f"X and y disagree on length: {len(rows)} != {len(outputs)}"
        )
    examples = [Example(r, o) for r, o in zip(rows, outputs)]
    check_examples(examples)
    return examples
