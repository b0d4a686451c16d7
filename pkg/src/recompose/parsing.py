"""Concrete syntax: parsing and canonical printing.

The surface form is deliberately small::

    fn(x0) { let parts = split(x0, ", "); return index(parts, 0) }

Parameters are literally ``x0, x1, ...`` in order; every operation is a
lower-case call; let-bindings end with ``;``.  :func:`parse` and
:func:`pretty` are exact inverses on well-formed programs:
``parse(pretty(p)) == p`` structurally, and printing is idempotent through
a parse round-trip.
"""
from __future__ import annotations

import re
from typing import Optional

from .patterns import PatternError, check_pattern
from .syntax import (
    ArityError, Concat, Contains, EndsWith, Eq, If, Index, InvalidProgram,
    Join, Len, LenEq, Lower, Matches, Program, RegexGroup, Replace, Slice,
    Split, StartsWith, Strip, ToText, Upper, Var, ConstInt, ConstText, Input,
    Expr, is_condition, validate_program, param_name, expr_children,
)

__all__ = ["ParseError", "ArityError", "parse", "pretty", "pretty_expr"]


class ParseError(ValueError):
    """Syntax error with the character offset and, when known, what was expected."""

    def __init__(self, message: str, position: int, expected: Optional[str] = None):
        self.position = position
        self.expected = expected
        if expected:
            message = f"{message} (expected {expected})"
        super().__init__(f"at offset {position}: {message}")


_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<str>"(?:[^"\\]|\\.)*")
      | (?P<int>-?[0-9]+)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<punct>[(){},;=])
    """,
    re.VERBOSE | re.DOTALL,
)

_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t", "r": "\r"}
_XNAME = re.compile(r"x[0-9]+\Z")
_KEYWORDS = {"fn", "let", "return", "none"}


def _decode_string(raw: str, pos: int) -> str:
    out: list[str] = []
    i = 1  # skip opening quote
    end = len(raw) - 1
    while i < end:
        ch = raw[i]
        if ch == "\\":
            esc = raw[i + 1]
            if esc not in _ESCAPES:
                raise ParseError(f"invalid escape \\{esc}", pos + i)
            out.append(_ESCAPES[esc])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _tokenize(text: str) -> list[tuple[str, object, int]]:
    toks: list[tuple[str, object, int]] = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            if text[i] == '"':
                raise ParseError("unterminated string literal", i)
            raise ParseError(f"unexpected character {text[i]!r}", i)
        kind = m.lastgroup
        if kind == "str":
            toks.append(("str", _decode_string(m.group(), i), i))
        elif kind == "int":
            toks.append(("int", int(m.group()), i))
        elif kind == "ident":
            toks.append(("ident", m.group(), i))
        elif kind == "punct":
            toks.append(("punct", m.group(), i))
        i = m.end()
    toks.append(("eof", "", len(text)))
    return toks


# argument shapes: e = expression, s = constant text, i = constant int,
# i? = constant int or `none`
_OPS: dict[str, tuple[tuple[str, ...], type]] = {
    "split": (("e", "s"), Split),
    "join": (("s", "e"), Join),
    "index": (("e", "i"), Index),
    "slice": (("e", "i?", "i?"), Slice),
    "strip": (("e",), Strip),
    "upper": (("e",), Upper),
    "lower": (("e",), Lower),
    "replace": (("e", "s", "s"), Replace),
    "regex_group": (("e", "s", "i"), RegexGroup),
    "len": (("e",), Len),
    "to_text": (("e",), ToText),
    "if": (("e", "e", "e"), If),
    "eq": (("e", "e"), Eq),
    "contains": (("e", "s"), Contains),
    "starts_with": (("e", "s"), StartsWith),
    "ends_with": (("e", "s"), EndsWith),
    "len_eq": (("e", "i"), LenEq),
    "matches": (("e", "s"), Matches),
}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.params = 0
        self.scope: set[str] = set()

    # token plumbing ------------------------------------------------------

    def peek(self) -> tuple[str, object, int]:
        return self.toks[self.i]

    def advance(self) -> tuple[str, object, int]:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect_punct(self, ch: str) -> None:
        kind, val, pos = self.peek()
        if kind != "punct" or val != ch:
            raise ParseError(f"found {self._describe()}", pos, expected=repr(ch))
        self.i += 1

    def expect_ident(self, word: Optional[str] = None) -> str:
        kind, val, pos = self.peek()
        if kind != "ident" or (word is not None and val != word):
            raise ParseError(
                f"found {self._describe()}", pos,
                expected=repr(word) if word else "a name",
            )
        self.i += 1
        return val  # type: ignore[return-value]

    def _describe(self) -> str:
        kind, val, _ = self.peek()
        if kind == "eof":
            return "end of input"
        return repr(val)

    # grammar -------------------------------------------------------------

    def program(self) -> Program:
        self.expect_ident("fn")
        self.expect_punct("(")
        names = [self.expect_ident()]
        while self.peek()[:2] == ("punct", ","):
            self.advance()
            names.append(self.expect_ident())
        self.expect_punct(")")
        for k, name in enumerate(names):
            if name != param_name(k):
                raise ParseError(
                    f"parameters must be x0, x1, ... in order; found {name!r}",
                    self.toks[0][2], expected=repr(param_name(k)),
                )
        self.params = len(names)

        self.expect_punct("{")
        bindings: list[tuple[str, Expr]] = []
        while self.peek()[:2] == ("ident", "let"):
            self.advance()
            kind, name, pos = self.peek()
            bname = self.expect_ident()
            if bname in _KEYWORDS or bname in _OPS or bname == "concat":
                raise ParseError(f"{bname!r} is reserved", pos)
            if _XNAME.fullmatch(bname):
                raise ParseError(
                    f"binding {bname!r} would collide with a parameter name", pos
                )
            if bname in self.scope:
                raise ParseError(f"name {bname!r} is already bound", pos)
            self.expect_punct("=")
            expr = self.expr(0)
            self.expect_punct(";")
            bindings.append((bname, expr))
            self.scope.add(bname)
        self.expect_ident("return")
        ret = self.expr(0)
        if self.peek()[:2] == ("punct", ";"):
            self.advance()
        self.expect_punct("}")
        kind, _, pos = self.peek()
        if kind != "eof":
            raise ParseError(f"trailing input {self._describe()}", pos)
        return Program(self.params, tuple(bindings), ret)

    def expr(self, depth: int) -> Expr:
        if depth > 200:
            raise ParseError("expression nesting too deep", self.peek()[2])
        kind, val, pos = self.peek()
        if kind == "str":
            self.advance()
            return ConstText(val)  # type: ignore[arg-type]
        if kind == "int":
            self.advance()
            return ConstInt(val)  # type: ignore[arg-type]
        if kind != "ident":
            raise ParseError(f"found {self._describe()}", pos, expected="an expression")
        name = val  # type: ignore[assignment]
        self.advance()
        if self.peek()[:2] != ("punct", "("):
            return self._name_ref(name, pos)  # type: ignore[arg-type]
        if name == "concat":
            return self._concat(pos, depth)
        if name not in _OPS:
            raise ParseError(f"unknown operation {name!r}", pos)
        return self._call(name, pos, depth)  # type: ignore[arg-type]

    def _name_ref(self, name: str, pos: int) -> Expr:
        m = _XNAME.fullmatch(name)
        if m:
            idx = int(name[1:])
            if idx >= self.params:
                raise ArityError(
                    f"at offset {pos}: input {name} out of range for "
                    f"{self.params} parameter(s)"
                )
            return Input(idx)
        if name in self.scope:
            return Var(name)
        raise ParseError(f"reference to unbound name {name!r}", pos)

    def _concat(self, pos: int, depth: int) -> Expr:
        self.expect_punct("(")
        parts = [self.expr(depth + 1)]
        while self.peek()[:2] == ("punct", ","):
            self.advance()
            parts.append(self.expr(depth + 1))
        self.expect_punct(")")
        if len(parts) < 2:
            raise ParseError("concat needs at least two parts", pos)
        return Concat(tuple(parts))

    def _call(self, name: str, call_pos: int, depth: int) -> Expr:
        shape, ctor = _OPS[name]
        self.expect_punct("(")
        args: list[object] = []
        for k, spec in enumerate(shape):
            if k:
                self.expect_punct(",")
            kind, val, pos = self.peek()
            if spec == "e":
                args.append(self.expr(depth + 1))
            elif spec == "s":
                if kind != "str":
                    raise ParseError(
                        f"found {self._describe()}", pos, expected="a text literal"
                    )
                self.advance()
                args.append(val)
            elif spec == "i":
                if kind != "int":
                    raise ParseError(
                        f"found {self._describe()}", pos, expected="an integer literal"
                    )
                self.advance()
                args.append(val)
            else:  # i?
                if kind == "ident" and val == "none":
                    self.advance()
                    args.append(None)
                elif kind == "int":
                    self.advance()
                    args.append(val)
                else:
                    raise ParseError(
                        f"found {self._describe()}", pos,
                        expected="an integer literal or `none`",
                    )
        self.expect_punct(")")
        node = ctor(*args)
        if isinstance(node, If) and not is_condition(node.cond):
            raise ParseError("the guard of `if` must be a condition", call_pos)
        if isinstance(node, (RegexGroup, Matches)):
            if len(node.pattern) > 256:
                raise ParseError("regex pattern longer than 256 characters", call_pos)
            try:
                check_pattern(node.pattern)
            except PatternError as exc:
                raise ParseError(f"unsupported regex pattern: {exc}", call_pos) from exc
        return node


def parse(text: str) -> Program:
    """Parse source text into a validated :class:`Program`.

    Raises:
        ParseError: malformed syntax, with the character offset.
        ArityError: an input reference beyond the declared parameters.
    """
    program = _Parser(text).program()
    try:
        return validate_program(program)
    except ArityError:
        raise
    except InvalidProgram as exc:
        raise ParseError(str(exc), 0) from exc


# --------------------------------------------------------------------------
# printing

_QUOTE_MAP = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\r": "\\r"}


def _quote(s: str) -> str:
    return '"' + "".join(_QUOTE_MAP.get(ch, ch) for ch in s) + '"'


def _bound(v: Optional[int]) -> str:
    return "none" if v is None else str(v)


def pretty_expr(e: Expr) -> str:
    if isinstance(e, Input):
        return param_name(e.index)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, ConstText):
        return _quote(e.text)
    if isinstance(e, ConstInt):
        return str(e.value)
    if isinstance(e, Split):
        return f"split({pretty_expr(e.source)}, {_quote(e.sep)})"
    if isinstance(e, Join):
        return f"join({_quote(e.sep)}, {pretty_expr(e.source)})"
    if isinstance(e, Index):
        return f"index({pretty_expr(e.source)}, {e.index})"
    if isinstance(e, Slice):
        return f"slice({pretty_expr(e.source)}, {_bound(e.lo)}, {_bound(e.hi)})"
    if isinstance(e, Concat):
        return "concat(" + ", ".join(pretty_expr(p) for p in e.parts) + ")"
    if isinstance(e, Strip):
        return f"strip({pretty_expr(e.source)})"
    if isinstance(e, Upper):
        return f"upper({pretty_expr(e.source)})"
    if isinstance(e, Lower):
        return f"lower({pretty_expr(e.source)})"
    if isinstance(e, Replace):
        return (f"replace({pretty_expr(e.source)}, {_quote(e.old)}, "
                f"{_quote(e.new)})")
    if isinstance(e, RegexGroup):
        return (f"regex_group({pretty_expr(e.source)}, {_quote(e.pattern)}, "
                f"{e.group})")
    if isinstance(e, Len):
        return f"len({pretty_expr(e.source)})"
    if isinstance(e, ToText):
        return f"to_text({pretty_expr(e.source)})"
    if isinstance(e, If):
        return (f"if({pretty_expr(e.cond)}, {pretty_expr(e.then)}, "
                f"{pretty_expr(e.orelse)})")
    if isinstance(e, Eq):
        return f"eq({pretty_expr(e.left)}, {pretty_expr(e.right)})"
    if isinstance(e, Contains):
        return f"contains({pretty_expr(e.source)}, {_quote(e.sub)})"
    if isinstance(e, StartsWith):
        return f"starts_with({pretty_expr(e.source)}, {_quote(e.prefix)})"
    if isinstance(e, EndsWith):
        return f"ends_with({pretty_expr(e.source)}, {_quote(e.suffix)})"
    if isinstance(e, LenEq):
        return f"len_eq({pretty_expr(e.source)}, {e.count})"
    if isinstance(e, Matches):
        return f"matches({pretty_expr(e.source)}, {_quote(e.pattern)})"
    raise TypeError(f"not an expression: {e!r}")


def pretty(p: Program) -> str:
    """Canonical single-line rendering; `parse(pretty(p)) == p`."""
    head = "fn(" + ", ".join(param_name(i) for i in range(p.params)) + ") { "
    body = "".join(f"let {name} = {pretty_expr(e)}; " for name, e in p.bindings)
    return head + body + f"return {pretty_expr(p.ret)}" + " }"
