"""Abstract syntax of the string-transformation language.

A program is a fixed-arity function over values: an ordered block of
let-bindings followed by a single return expression.  Expressions are
immutable trees; condition atoms (``eq``, ``contains``, ``starts_with``,
``ends_with``, ``len_eq``, ``matches``) are ordinary expressions that
evaluate to Bool, and ``if`` requires one of them as its guard.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .patterns import PatternError, check_pattern

_XNAME = re.compile(r"x[0-9]+\Z")

__all__ = [
    "Input", "ConstText", "ConstInt", "Var",
    "Split", "Join", "Index", "Slice", "Concat", "Strip", "Upper", "Lower",
    "Replace", "RegexGroup", "Len", "ToText", "If",
    "Eq", "Contains", "StartsWith", "EndsWith", "LenEq", "Matches",
    "Cond", "Expr", "Program",
    "ArityError", "InvalidProgram",
    "expr_children", "with_children", "expr_size", "program_size",
    "is_condition", "iter_exprs", "free_vars", "substitute",
    "validate_program", "param_name", "fresh_name",
]


class InvalidProgram(ValueError):
    """A structurally ill-formed program or expression."""


class ArityError(InvalidProgram):
    """An input reference is out of range for the declared parameter count."""


# --------------------------------------------------------------------------
# expression nodes


@dataclass(frozen=True)
class Input:
    """Reference to the function parameter at `index` (0-based)."""

    index: int


@dataclass(frozen=True)
class ConstText:
    text: str


@dataclass(frozen=True)
class ConstInt:
    value: int


@dataclass(frozen=True)
class Var:
    """Reference to an earlier let-binding."""

    name: str


@dataclass(frozen=True)
class Split:
    source: Expr
    sep: str


@dataclass(frozen=True)
class Join:
    sep: str
    source: Expr


@dataclass(frozen=True)
class Index:
    """Element at `index`; negative indices count from the end (-1 = last)."""

    source: Expr
    index: int


@dataclass(frozen=True)
class Slice:
    source: Expr
    lo: Optional[int]
    hi: Optional[int]


@dataclass(frozen=True)
class Concat:
    parts: tuple[Expr, ...]


@dataclass(frozen=True)
class Strip:
    source: Expr


@dataclass(frozen=True)
class Upper:
    source: Expr


@dataclass(frozen=True)
class Lower:
    source: Expr


@dataclass(frozen=True)
class Replace:
    source: Expr
    old: str
    new: str


@dataclass(frozen=True)
class RegexGroup:
    """Text of capture group `group` of the first match of `pattern`."""

    source: Expr
    pattern: str
    group: int


@dataclass(frozen=True)
class Len:
    source: Expr


@dataclass(frozen=True)
class ToText:
    source: Expr


# condition atoms — expressions evaluating to Bool


@dataclass(frozen=True)
class Eq:
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Contains:
    source: Expr
    sub: str


@dataclass(frozen=True)
class StartsWith:
    source: Expr
    prefix: str


@dataclass(frozen=True)
class EndsWith:
    source: Expr
    suffix: str


@dataclass(frozen=True)
class LenEq:
    source: Expr
    count: int


@dataclass(frozen=True)
class Matches:
    """True when `pattern` is found anywhere in the text (search semantics)."""

    source: Expr
    pattern: str


@dataclass(frozen=True)
class If:
    """Guarded choice; `cond` must be a condition atom."""

    cond: Expr
    then: Expr
    orelse: Expr


Cond = Union[Eq, Contains, StartsWith, EndsWith, LenEq, Matches]
Expr = Union[
    Input, ConstText, ConstInt, Var,
    Split, Join, Index, Slice, Concat, Strip, Upper, Lower,
    Replace, RegexGroup, Len, ToText, If,
    Eq, Contains, StartsWith, EndsWith, LenEq, Matches,
]

_COND_TYPES = (Eq, Contains, StartsWith, EndsWith, LenEq, Matches)


def is_condition(e: Expr) -> bool:
    return isinstance(e, _COND_TYPES)


# --------------------------------------------------------------------------
# programs


@dataclass(frozen=True)
class Program:
    """A function of `params` inputs: let-bindings in order, then a return.

    Binding names are unique, never shadow a parameter name, and may only
    be referenced after their definition.
    """

    params: int
    bindings: tuple[tuple[str, Expr], ...] = field(default_factory=tuple)
    ret: Expr = ConstText("")

    def size(self) -> int:
        return program_size(self)


def param_name(i: int) -> str:
    return f"x{i}"


# --------------------------------------------------------------------------
# structural helpers


def expr_children(e: Expr) -> tuple[Expr, ...]:
    """The expression-valued children of a node, in argument order.

    Constant operator arguments (separators, patterns, integer indices)
    are not children; they are part of the node itself.
    """
    if isinstance(e, (Input, ConstText, ConstInt, Var)):
        return ()
    if isinstance(e, Concat):
        return e.parts
    if isinstance(e, Eq):
        return (e.left, e.right)
    if isinstance(e, If):
        return (e.cond, e.then, e.orelse)
    return (e.source,)  # type: ignore[union-attr]


def with_children(e: Expr, children: tuple[Expr, ...]) -> Expr:
    """Rebuild `e` with new expression children (same shape, same constants)."""
    old = expr_children(e)
    if len(old) != len(children):
        raise InvalidProgram(
            f"{type(e).__name__} takes {len(old)} children, got {len(children)}"
        )
    if not old:
        return e
    if isinstance(e, Concat):
        return Concat(tuple(children))
    if isinstance(e, Eq):
        return Eq(children[0], children[1])
    if isinstance(e, If):
        return If(children[0], children[1], children[2])
    if isinstance(e, Split):
        return Split(children[0], e.sep)
    if isinstance(e, Join):
        return Join(e.sep, children[0])
    if isinstance(e, Index):
        return Index(children[0], e.index)
    if isinstance(e, Slice):
        return Slice(children[0], e.lo, e.hi)
    if isinstance(e, Replace):
        return Replace(children[0], e.old, e.new)
    if isinstance(e, RegexGroup):
        return RegexGroup(children[0], e.pattern, e.group)
    if isinstance(e, Contains):
        return Contains(children[0], e.sub)
    if isinstance(e, StartsWith):
        return StartsWith(children[0], e.prefix)
    if isinstance(e, EndsWith):
        return EndsWith(children[0], e.suffix)
    if isinstance(e, LenEq):
        return LenEq(children[0], e.count)
    if isinstance(e, Matches):
        return Matches(children[0], e.pattern)
    return type(e)(children[0])  # type: ignore[call-arg]


def expr_size(e: Expr) -> int:
    """Number of expression nodes in the tree."""
    return 1 + sum(expr_size(c) for c in expr_children(e))


def program_size(p: Program) -> int:
    return sum(expr_size(e) for _, e in p.bindings) + expr_size(p.ret)


def iter_exprs(p: Program) -> Iterator[Expr]:
    """All expressions of a program in source order: bindings, then return."""
    for _, e in p.bindings:
        yield e
    yield p.ret


def free_vars(e: Expr) -> set[str]:
    out: set[str] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.name)
        stack.extend(expr_children(node))
    return out


def substitute(
    e: Expr,
    var_map: Optional[dict[str, Expr]] = None,
    input_map: Optional[dict[int, Expr]] = None,
) -> Expr:
    """Replace Var and/or Input references throughout an expression tree."""
    if isinstance(e, Var) and var_map is not None and e.name in var_map:
        return var_map[e.name]
    if isinstance(e, Input) and input_map is not None and e.index in input_map:
        return input_map[e.index]
    children = expr_children(e)
    if not children:
        return e
    return with_children(e, tuple(substitute(c, var_map, input_map) for c in children))


def fresh_name(taken: set[str], stem: str = "v") -> str:
    """First `stem`N not in `taken`; registers the result in `taken`."""
    n = 1
    while f"{stem}{n}" in taken:
        n += 1
    name = f"{stem}{n}"
    taken.add(name)
    return name


# --------------------------------------------------------------------------
# validation

_MAX_PATTERN_LEN = 256


def _check_expr(e: Expr, params: int, scope: set[str], depth: int = 0) -> None:
    if depth > 400:
        raise InvalidProgram("expression nesting too deep")
    if isinstance(e, Input):
        if not 0 <= e.index < params:
            raise ArityError(
                f"input x{e.index} out of range for {params} parameter(s)"
            )
    elif isinstance(e, Var):
        if e.name not in scope:
            raise InvalidProgram(f"reference to unbound name {e.name!r}")
    elif isinstance(e, Concat):
        if len(e.parts) < 2:
            raise InvalidProgram("concat needs at least two parts")
    elif isinstance(e, (RegexGroup, Matches)):
        if len(e.pattern) > _MAX_PATTERN_LEN:
            raise InvalidProgram("regex pattern longer than 256 characters")
        try:
            check_pattern(e.pattern)
        except PatternError as exc:
            raise InvalidProgram(f"unsupported regex pattern: {exc}") from exc
    elif isinstance(e, If):
        if not is_condition(e.cond):
            raise InvalidProgram("the guard of `if` must be a condition atom")
    if isinstance(e, ConstInt) and isinstance(e.value, bool):
        raise InvalidProgram("integer literal expected, got a boolean")
    for c in expr_children(e):
        _check_expr(c, params, scope, depth + 1)


def validate_program(p: Program) -> Program:
    """Check structural invariants; returns `p` unchanged if well-formed.

    Raises:
        InvalidProgram: duplicate/shadowing binding names, forward or
            unbound references, malformed node arguments.
        ArityError: an input reference is out of range.
    """
    if p.params < 1:
        raise InvalidProgram("a program needs at least one parameter")
    scope: set[str] = set()
    for name, expr in p.bindings:
        if not name.isidentifier():
            raise InvalidProgram(f"binding name {name!r} is not an identifier")
        if _XNAME.fullmatch(name):
            raise InvalidProgram(f"binding {name!r} collides with parameter naming")
        if name in scope:
            raise InvalidProgram(f"binding {name!r} defined twice")
        _check_expr(expr, p.params, scope)
        scope.add(name)
    _check_expr(p.ret, p.params, scope)
    return p
