"""Dataflow view of a program: a bipartite value/operation graph.

The graph records how the returned value is computed: leaves are the inputs
and literal constants, internal value nodes are produced by function nodes
(one per operation application reachable from the return expression).
Conditionals are projected onto their then-branch — the selected value nodes
are listed in :attr:`DataflowGraph.if_choices` — so the graph always
describes one straight-line computation.

Two salvage views are derived from the graph:

* :func:`extract_forward1` — operations applied directly to the inputs
  (usable as a first step worth keeping);
* :func:`extract_backward1` — the final operation with its value arguments
  turned into holes (a last step worth keeping).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .interp import apply_op
from .parsing import pretty_expr
from .syntax import (
    ConstInt, ConstText, Expr, If, Input, Program, Var, expr_children,
    expr_size, free_vars, with_children,
)
from .values import Bottom, Value, is_bottom

__all__ = [
    "UnsupportedShape", "ValueNode", "FunctionNode", "DataflowGraph",
    "PrefixProgram", "Hole", "SuffixProgram",
    "build_graph", "extract_forward1", "extract_backward1", "graph_eval",
]


class UnsupportedShape(Exception):
    """The program has no usable dataflow for the requested salvage."""


@dataclass(frozen=True)
class ValueNode:
    id: int
    origin: str  # "input" | "const" | "derived"
    expr: Expr  # standalone expression over the original inputs
    input_index: Optional[int] = None

    @property
    def size(self) -> int:
        return expr_size(self.expr)


@dataclass(frozen=True)
class FunctionNode:
    id: int
    op: str
    node: Expr  # original operation node, carrying constant arguments
    children: tuple[int, ...]  # value-node ids in argument order
    result: int
    position: int  # source order among function nodes


@dataclass
class DataflowGraph:
    params: int
    values: dict[int, ValueNode] = field(default_factory=dict)
    functions: dict[int, FunctionNode] = field(default_factory=dict)
    producer: dict[int, int] = field(default_factory=dict)  # value id -> fn id
    root: int = -1
    if_choices: tuple[int, ...] = ()  # value nodes selected through an `if`

    def to_dot(self) -> str:
        """Graphviz rendering; value nodes are ellipses, operations boxes."""
        def esc(s: str) -> str:
            return s.replace("\\", "\\\\").replace('"', '\\"')

        lines = ["digraph dataflow {", "  rankdir=BT;"]
        for v in self.values.values():
            label = pretty_expr(v.expr) if v.origin != "derived" else f"v{v.id}"
            extra = ", peripheries=2" if v.id == self.root else ""
            lines.append(
                f'  v{v.id} [shape=ellipse, label="{esc(label)}"{extra}];'
            )
        for f in sorted(self.functions.values(), key=lambda f: f.position):
            lines.append(f'  f{f.id} [shape=box, label="{esc(_op_label(f.node))}"];')
            for c in f.children:
                lines.append(f"  v{c} -> f{f.id};")
            lines.append(f"  f{f.id} -> v{f.result};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _op_label(e: Expr) -> str:
    placeholders = tuple(Var("_") for _ in expr_children(e))
    return pretty_expr(with_children(e, placeholders))


class _Builder:
    def __init__(self, params: int):
        self.g = DataflowGraph(params)
        self.next_id = 0
        self.positions = 0
        self.input_nodes: dict[int, int] = {}
        self.env: dict[str, int] = {}
        self.if_choices: list[int] = []

    def new_value(self, origin: str, expr: Expr, input_index: Optional[int] = None) -> int:
        vid = self.next_id
        self.next_id += 1
        self.g.values[vid] = ValueNode(vid, origin, expr, input_index)
        return vid

    def build(self, e: Expr) -> int:
        if isinstance(e, Input):
            if e.index not in self.input_nodes:
                self.input_nodes[e.index] = self.new_value("input", e, e.index)
            return self.input_nodes[e.index]
        if isinstance(e, (ConstText, ConstInt)):
            return self.new_value("const", e)
        if isinstance(e, Var):
            return self.env[e.name]
        if isinstance(e, If):
            # one path through each conditional: the then-branch
            chosen = self.build(e.then)
            self.if_choices.append(chosen)
            return chosen
        children = tuple(self.build(c) for c in expr_children(e))
        standalone = with_children(
            e, tuple(self.g.values[c].expr for c in children)
        )
        result = self.new_value("derived", standalone)
        fid = self.next_id
        self.next_id += 1
        op = type(e).__name__.lower()
        fn = FunctionNode(fid, op, e, children, result, self.positions)
        self.positions += 1
        self.g.functions[fid] = fn
        self.g.producer[result] = fid
        return result


def _live_names(p: Program) -> set[str]:
    live = set(free_vars(p.ret))
    for name, expr in reversed(p.bindings):
        if name in live:
            live |= free_vars(expr)
    return live


def build_graph(p: Program) -> DataflowGraph:
    """Build the dataflow graph of `p`'s return value.

    Bindings that the return value never uses are not part of the graph.

    Raises:
        UnsupportedShape: the returned value does not depend on any input
            (a constant program has nothing to salvage).
    """
    b = _Builder(p.params)
    live = _live_names(p)
    for name, expr in p.bindings:
        if name in live:
            b.env[name] = b.build(expr)
    b.g.root = b.build(p.ret)
    b.g.if_choices = tuple(b.if_choices)
    if not any(
        v.origin == "input" for v in b.g.values.values()
    ) or not _depends_on_input(b.g, b.g.root):
        raise UnsupportedShape("the returned value does not depend on any input")
    return b.g


def _depends_on_input(g: DataflowGraph, vid: int) -> bool:
    stack = [vid]
    seen = set()
    while stack:
        v = stack.pop()
        if v in seen:
            continue
        seen.add(v)
        node = g.values[v]
        if node.origin == "input":
            return True
        fid = g.producer.get(v)
        if fid is not None:
            stack.extend(g.functions[fid].children)
    return False


# --------------------------------------------------------------------------
# forward salvage: first operations applied directly to the inputs


@dataclass(frozen=True)
class PrefixProgram:
    """A first step worth keeping: one operation over inputs and constants."""

    program: Program
    node_id: int
    op: str
    inputs_consumed: int


def extract_forward1(g: DataflowGraph) -> list[PrefixProgram]:
    """Operations whose value arguments are all leaves, at least one input.

    Ordered by number of distinct inputs consumed (descending), then source
    position.  Each candidate keeps the original arity so it can run on the
    task's input tuples unchanged.
    """
    out: list[tuple[int, int, PrefixProgram]] = []
    for f in sorted(g.functions.values(), key=lambda f: f.position):
        kids = [g.values[c] for c in f.children]
        if any(k.origin == "derived" for k in kids):
            continue
        distinct = {k.input_index for k in kids if k.origin == "input"}
        if not distinct:
            continue
        prog = Program(g.params, (), g.values[f.result].expr)
        out.append(
            (-len(distinct), f.position,
             PrefixProgram(prog, f.result, f.op, len(distinct)))
        )
    out.sort(key=lambda t: t[:2])
    return [p for _, _, p in out]


# --------------------------------------------------------------------------
# backward salvage: the final operation with holes for its value arguments


@dataclass(frozen=True)
class Hole:
    """One hole of a suffix: the value-node it replaced and its source text."""

    value_id: int
    source: str


@dataclass(frozen=True)
class SuffixProgram:
    """The last operation, abstracted over at most two hole inputs.

    `program` is runnable standalone with the hole values as its inputs.
    `slots` mirrors the operation's argument positions: ``("hole", k)`` for
    the k-th hole, ``("inline", expr)`` for arguments kept verbatim.  When
    an inlined argument still mentions an original input (possible only
    when more than two value arguments forced a choice), the standalone
    program cannot reproduce the original computation; `sound_standalone`
    is False and inverse search will simply find nothing to verify.
    """

    program: Program
    holes: tuple[Hole, ...]
    op: str
    slots: tuple[tuple[str, object], ...]
    node: Expr
    sound_standalone: bool = True

    def recompose(self, hole_exprs: Sequence[Expr]) -> Expr:
        """Rebuild the original operation with expressions in the holes."""
        if len(hole_exprs) != len(self.holes):
            raise ValueError(
                f"expected {len(self.holes)} hole expressions, got {len(hole_exprs)}"
            )
        children: list[Expr] = []
        for kind, payload in self.slots:
            if kind == "hole":
                children.append(hole_exprs[payload])  # type: ignore[index]
            else:
                children.append(payload)  # type: ignore[arg-type]
        return with_children(self.node, tuple(children))


def extract_backward1(g: DataflowGraph) -> SuffixProgram:
    """Abstract the operation producing the output over ≤ 2 holes.

    Every distinct non-constant value argument becomes a hole; if there are
    more than two, the two largest by subtree size are kept as holes and the
    remainder are inlined verbatim.

    Raises:
        UnsupportedShape: the output is a leaf (nothing to abstract).
    """
    fid = g.producer.get(g.root)
    if fid is None:
        raise UnsupportedShape("the output is a leaf, not an operation result")
    f = g.functions[fid]

    order: list[int] = []  # distinct non-const children, first-occurrence order
    for c in f.children:
        if g.values[c].origin != "const" and c not in order:
            order.append(c)
    chosen = order
    if len(order) > 2:
        ranked = sorted(
            order, key=lambda c: (-g.values[c].size, order.index(c))
        )[:2]
        chosen = [c for c in order if c in ranked]
    hole_of = {c: k for k, c in enumerate(chosen)}

    slots: list[tuple[str, object]] = []
    children: list[Expr] = []
    for c in f.children:
        node = g.values[c]
        if c in hole_of:
            slots.append(("hole", hole_of[c]))
            children.append(Input(hole_of[c]))
        else:
            slots.append(("inline", node.expr))
            children.append(node.expr)
    body = with_children(f.node, tuple(children))
    inlined_ok = all(
        kind == "hole" or not _mentions_input(payload)  # type: ignore[arg-type]
        for kind, payload in slots
    )
    holes = tuple(
        Hole(c, pretty_expr(g.values[c].expr)) for c in chosen
    )
    return SuffixProgram(
        program=Program(len(chosen), (), body),
        holes=holes,
        op=f.op,
        slots=tuple(slots),
        node=f.node,
        sound_standalone=inlined_ok,
    )


def _mentions_input(e: Expr) -> bool:
    if isinstance(e, Input):
        return True
    return any(_mentions_input(c) for c in expr_children(e))


# --------------------------------------------------------------------------
# graph re-evaluation (used to check the graph preserves the computation)


def graph_eval(g: DataflowGraph, inputs: Sequence[Value]) -> Value:
    """Evaluate the graph bottom-up; equals `eval` for straight-line programs."""
    vals: dict[int, Value] = {}
    for v in g.values.values():
        if v.origin == "input":
            if v.input_index >= len(inputs):  # type: ignore[operator]
                return Bottom(f"input x{v.input_index} not supplied")
            vals[v.id] = inputs[v.input_index]  # type: ignore[index]
        elif v.origin == "const":
            vals[v.id] = (
                v.expr.text if isinstance(v.expr, ConstText) else v.expr.value  # type: ignore[union-attr]
            )
    for f in sorted(g.functions.values(), key=lambda f: f.position):
        args = [vals[c] for c in f.children]
        bad = next((a for a in args if is_bottom(a)), None)
        vals[f.result] = bad if bad is not None else apply_op(f.node, args)
    return vals[g.root]
