"""Guard rail for user-supplied regular expressions.

Evaluation must stay linear-time-ish, so patterns are restricted to a safe
subset: no backreferences, no lookaround, and no unbounded repeat nested
inside another unbounded repeat (the classic catastrophic-backtracking
shape).  The checker walks the stdlib's own parse tree rather than
reimplementing regex parsing.
"""
from __future__ import annotations

try:  # Python >= 3.11 moved the internals under re.*
    from re import _constants as _sc  # type: ignore[attr-defined]
    from re import _parser as _sp  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover - 3.10 fallback
    import sre_constants as _sc  # type: ignore[no-redef]
    import sre_parse as _sp  # type: ignore[no-redef]

__all__ = ["PatternError", "check_pattern"]

_UNBOUNDED = _sc.MAXREPEAT


class PatternError(ValueError):
    """The pattern is invalid or outside the supported subset."""


def _walk(items, in_unbounded: bool) -> None:
    for op, av in items:
        name = str(op)
        if name in ("GROUPREF", "GROUPREF_EXISTS"):
            raise PatternError("backreferences are not supported")
        if name in ("ASSERT", "ASSERT_NOT"):
            raise PatternError("lookaround assertions are not supported")
        if name in ("MAX_REPEAT", "MIN_REPEAT", "POSSESSIVE_REPEAT"):
            lo, hi, sub = av
            unbounded = hi == _UNBOUNDED
            if unbounded and in_unbounded:
                raise PatternError("nested unbounded repetition")
            _walk(sub, in_unbounded or unbounded)
        elif name == "SUBPATTERN":
            _walk(av[3], in_unbounded)
        elif name == "BRANCH":
            for alt in av[1]:
                _walk(alt, in_unbounded)
        elif name == "ATOMIC_GROUP":  # pragma: no cover - 3.11+ only
            _walk(av, in_unbounded)
        # literals, classes, anchors etc. carry no subpatterns


def check_pattern(pattern: str) -> None:
    """Raise :class:`PatternError` unless `pattern` is in the safe subset."""
    try:
        tree = _sp.parse(pattern)
    except _sc.error as exc:
        raise PatternError(str(exc)) from exc
    _walk(tree, False)
