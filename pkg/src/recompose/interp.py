"""Total evaluator for the string-transformation language.

Evaluation never raises: every fault (bad type, out-of-range index, missing
regex match, exhausted step budget) becomes a :class:`~recompose.values.Bottom`
carrying the reason, and failure propagates outward so Bottom never nests.
Let-bindings evaluate eagerly in order — a failing binding fails the run even
if the result expression would not have used it.
"""
from __future__ import annotations

import re
from functools import lru_cache
from typing import Sequence

from .syntax import (
    Concat, ConstInt, ConstText, Contains, EndsWith, Eq, Expr, If, Index,
    Input, Join, Len, LenEq, Lower, Matches, Program, RegexGroup, Replace,
    Slice, Split, StartsWith, Strip, ToText, Upper, Var, expr_children,
)
from .task import Example
from .values import Bottom, Value, is_bottom, values_equal

__all__ = ["STEP_LIMIT", "eval_program", "solves", "apply_op"]

STEP_LIMIT = 10_000


@lru_cache(maxsize=1024)
def _compiled(pattern: str) -> re.Pattern:
    return re.compile(pattern)


def _text_arg(op: str, v: Value) -> Bottom | None:
    if not isinstance(v, str):
        return Bottom(f"{op} expects text, got {type(v).__name__}")
    return None


def apply_op(e: Expr, args: Sequence[Value]) -> Value:
    """Apply the operation at node `e` to already-evaluated child values.

    `args` follows :func:`~recompose.syntax.expr_children` order.  Control
    flow (`if`) and leaf nodes are not handled here — they never reach the
    value level as plain operations.
    """
    if isinstance(e, Split):
        (v,) = args
        if (err := _text_arg("split", v)) is not None:
            return err
        if e.sep == "":
            return Bottom("split with an empty separator")
        return v.split(e.sep)
    if isinstance(e, Join):
        (v,) = args
        if not isinstance(v, (list, tuple)) or isinstance(v, Bottom):
            return Bottom(f"join expects a list, got {type(v).__name__}")
        if any(not isinstance(x, str) for x in v):
            return Bottom("join expects a list of text values")
        return e.sep.join(v)
    if isinstance(e, Index):
        (v,) = args
        if not isinstance(v, (str, list, tuple)):
            return Bottom(f"index expects text or a list, got {type(v).__name__}")
        if not -len(v) <= e.index < len(v):
            return Bottom(f"index {e.index} out of range for length {len(v)}")
        return v[e.index]
    if isinstance(e, Slice):
        (v,) = args
        if not isinstance(v, (str, list, tuple)):
            return Bottom(f"slice expects text or a list, got {type(v).__name__}")
        return v[e.lo : e.hi]
    if isinstance(e, Concat):
        for v in args:
            if (err := _text_arg("concat", v)) is not None:
                return err
        return "".join(args)  # type: ignore[arg-type]
    if isinstance(e, Strip):
        (v,) = args
        return err if (err := _text_arg("strip", v)) is not None else v.strip()
    if isinstance(e, Upper):
        (v,) = args
        return err if (err := _text_arg("upper", v)) is not None else v.upper()
    if isinstance(e, Lower):
        (v,) = args
        return err if (err := _text_arg("lower", v)) is not None else v.lower()
    if isinstance(e, Replace):
        (v,) = args
        if (err := _text_arg("replace", v)) is not None:
            return err
        return v.replace(e.old, e.new)
    if isinstance(e, RegexGroup):
        (v,) = args
        if (err := _text_arg("regex_group", v)) is not None:
            return err
        try:
            m = _compiled(e.pattern).search(v)
        except re.error as exc:
            return Bottom(f"invalid regex: {exc}")
        if m is None:
            return Bottom("no regex match")
        try:
            g = m.group(e.group)
        except IndexError:
            return Bottom(f"no regex group {e.group}")
        if g is None:
            return Bottom(f"regex group {e.group} did not participate in the match")
        return g
    if isinstance(e, Len):
        (v,) = args
        if not isinstance(v, (str, list, tuple)):
            return Bottom(f"len expects text or a list, got {type(v).__name__}")
        return len(v)
    if isinstance(e, ToText):
        (v,) = args
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, str):
            return v
        if isinstance(v, int):
            return str(v)
        return Bottom(f"to_text expects a scalar, got {type(v).__name__}")
    if isinstance(e, Eq):
        return values_equal(args[0], args[1])
    if isinstance(e, Contains):
        (v,) = args
        if (err := _text_arg("contains", v)) is not None:
            return err
        return e.sub in v
    if isinstance(e, StartsWith):
        (v,) = args
        if (err := _text_arg("starts_with", v)) is not None:
            return err
        return v.startswith(e.prefix)
    if isinstance(e, EndsWith):
        (v,) = args
        if (err := _text_arg("ends_with", v)) is not None:
            return err
        return v.endswith(e.suffix)
    if isinstance(e, LenEq):
        (v,) = args
        if not isinstance(v, (str, list, tuple)):
            return Bottom(f"len_eq expects text or a list, got {type(v).__name__}")
        return len(v) == e.count
    if isinstance(e, Matches):
        (v,) = args
        if (err := _text_arg("matches", v)) is not None:
            return err
        try:
            return _compiled(e.pattern).search(v) is not None
        except re.error as exc:
            return Bottom(f"invalid regex: {exc}")
    raise TypeError(f"apply_op cannot handle {type(e).__name__}")


class _Budget:
    __slots__ = ("left",)

    def __init__(self, limit: int):
        self.left = limit


def _eval(e: Expr, inputs: Sequence[Value], env: dict[str, Value],
          budget: _Budget) -> Value:
    budget.left -= 1
    if budget.left < 0:
        return Bottom("step budget exceeded")
    if isinstance(e, Input):
        if e.index >= len(inputs):
            return Bottom(f"input x{e.index} not supplied")
        return inputs[e.index]
    if isinstance(e, ConstText):
        return e.text
    if isinstance(e, ConstInt):
        return e.value
    if isinstance(e, Var):
        if e.name not in env:
            return Bottom(f"unbound name {e.name}")
        return env[e.name]
    if isinstance(e, If):
        c = _eval(e.cond, inputs, env, budget)
        if is_bottom(c):
            return c
        if not isinstance(c, bool):
            return Bottom("condition did not produce a boolean")
        return _eval(e.then if c else e.orelse, inputs, env, budget)
    args = []
    for child in expr_children(e):
        v = _eval(child, inputs, env, budget)
        if is_bottom(v):
            return v
        args.append(v)
    return apply_op(e, args)


def eval_program(p: Program, inputs: Sequence[Value]) -> Value:
    """Run `p` on one input tuple; total, deterministic, Bottom on any fault.

    At most :data:`STEP_LIMIT` expression nodes are visited per run.
    """
    if len(inputs) != p.params:
        return Bottom(
            f"arity mismatch: program takes {p.params}, got {len(inputs)}"
        )
    if any(is_bottom(v) for v in inputs):
        return Bottom("failure value among the inputs")
    budget = _Budget(STEP_LIMIT)
    env: dict[str, Value] = {}
    try:
        for name, expr in p.bindings:
            v = _eval(expr, inputs, env, budget)
            if is_bottom(v):
                return v
            env[name] = v
        return _eval(p.ret, inputs, env, budget)
    except RecursionError:
        return Bottom("expression recursion too deep")


def solves(p: Program, examples: Sequence[Example]) -> tuple[bool, list[bool]]:
    """Whether `p` reproduces every example; also the per-example verdicts."""
    flags = [
        values_equal(eval_program(p, ex.inputs), ex.output) for ex in examples
    ]
    return all(flags), flags
