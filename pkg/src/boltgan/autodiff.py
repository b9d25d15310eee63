"""Minimal reverse-mode automatic differentiation over dense float64 arrays.

Every adjoint rule is itself written with recorded operations, so a gradient
returned with ``create_graph=True`` can be differentiated again. That is what
the interpolation gradient penalty needs: the penalty is a function of
``d critic / d input`` and is minimized with respect to the critic weights.

Shapes follow numpy conventions. Element-wise binary ops require equal shapes;
the only implicit broadcasts are Python scalars and the bias row in
:func:`affine`.
"""

from __future__ import annotations

import contextlib
import itertools
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Node",
    "AutodiffError",
    "ShapeError",
    "constant",
    "variable",
    "no_grad",
    "backward",
    "add",
    "sub",
    "mul",
    "scale",
    "reciprocal",
    "matmul",
    "transpose",
    "affine",
    "relu",
    "leaky_relu",
    "sigmoid",
    "tanh",
    "sum",
    "mean",
    "square",
    "sqrt",
    "norm",
    "concat",
    "slice_rows",
    "expand",
]


class AutodiffError(RuntimeError):
    """Raised for non-scalar roots and non-finite adjoints."""


class ShapeError(ValueError):
    pass


_grad_enabled = True
_counter = itertools.count()


@contextlib.contextmanager
def no_grad():
    """Evaluate operations without recording parents."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Node:
    """A value on the tape together with how it was produced.

    ``vjp`` maps the upstream adjoint (a Node) to one adjoint per parent,
    using recorded ops only.
    """

    __slots__ = ("value", "op", "parents", "vjp", "requires_grad", "uid")

    def __init__(self, value, op="leaf", parents=(), vjp=None, requires_grad=False):
        self.value = np.asarray(value, dtype=np.float64)
        self.op = op
        self.parents = parents
        self.vjp = vjp
        self.requires_grad = requires_grad
        self.uid = next(_counter)

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Node(op={self.op!r}, shape={self.shape})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        if isinstance(other, Node):
            return mul(self, other)
        return scale(self, float(other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def constant(value) -> Node:
    return Node(value)


def variable(value) -> Node:
    """A leaf that gradients can be taken with respect to."""
    return Node(value, requires_grad=True)


def _as_node(x, like: Node | None = None) -> Node:
    if isinstance(x, Node):
        return x
    if like is not None and np.ndim(x) == 0:
        return Node(np.full(like.shape, float(x)))
    return Node(x)


def _record(op, value, parents, vjp) -> Node:
    if _grad_enabled and any(p.requires_grad for p in parents):
        return Node(value, op, tuple(parents), vjp, True)
    return Node(value, op)


def _check_same(op, a: Node, b: Node):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# ---------------------------------------------------------------------------
# element-wise arithmetic


def add(a, b) -> Node:
    a = _as_node(a, b if isinstance(b, Node) else None)
    b = _as_node(b, a)
    _check_same("add", a, b)
    return _record("add", a.value + b.value, (a, b), lambda g: (g, g))


def sub(a, b) -> Node:
    a = _as_node(a, b if isinstance(b, Node) else None)
    b = _as_node(b, a)
    _check_same("sub", a, b)
    return _record("sub", a.value - b.value, (a, b), lambda g: (g, scale(g, -1.0)))


def mul(a, b) -> Node:
    a = _as_node(a, b if isinstance(b, Node) else None)
    b = _as_node(b, a)
    _check_same("mul", a, b)
    return _record("mul", a.value * b.value, (a, b), lambda g: (mul(g, b), mul(g, a)))


def scale(a: Node, c: float) -> Node:
    c = float(c)
    return _record("scale", a.value * c, (a,), lambda g: (scale(g, c),))


def reciprocal(a: Node) -> Node:
    out_value = 1.0 / a.value

    def vjp(g):
        return (scale(mul(g, square(out)), -1.0),)

    out = _record("reciprocal", out_value, (a,), vjp)
    return out


def square(a: Node) -> Node:
    return _record("square", a.value * a.value, (a,), lambda g: (scale(mul(g, a), 2.0),))


def sqrt(a: Node) -> Node:
    def vjp(g):
        return (scale(mul(g, reciprocal(out)), 0.5),)

    out = _record("sqrt", np.sqrt(a.value), (a,), vjp)
    return out


# ---------------------------------------------------------------------------
# linear algebra


def transpose(a: Node) -> Node:
    return _record("transpose", a.value.T, (a,), lambda g: (transpose(g),))


def matmul(a: Node, b: Node) -> Node:
    a, b = _as_node(a), _as_node(b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: shape mismatch {a.shape} vs {b.shape}")

    def vjp(g):
        return matmul(g, transpose(b)), matmul(transpose(a), g)

    return _record("matmul", a.value @ b.value, (a, b), vjp)


def affine(x: Node, w: Node, b: Node) -> Node:
    """Row-batched ``x @ w.T + b`` with ``w`` stored as (out, in)."""
    if x.value.ndim != 2 or w.value.ndim != 2 or x.shape[1] != w.shape[1]:
        raise ShapeError(f"affine: shape mismatch {x.shape} vs {w.shape}")
    if b.shape != (w.shape[0],):
        raise ShapeError(f"affine: bias shape {b.shape} vs weight {w.shape}")

    def vjp(g):
        return matmul(g, w), matmul(transpose(g), x), sum(g, axis=0)

    return _record("affine", x.value @ w.value.T + b.value, (x, w, b), vjp)


# ---------------------------------------------------------------------------
# activations


def relu(a: Node) -> Node:
    # right-derivative at 0
    mask = Node((a.value >= 0).astype(np.float64))
    return _record("relu", a.value * mask.value, (a,), lambda g: (mul(g, mask),))


def leaky_relu(a: Node, alpha: float = 0.2) -> Node:
    slope = Node(np.where(a.value >= 0, 1.0, alpha))
    return _record("leaky_relu", a.value * slope.value, (a,), lambda g: (mul(g, slope),))


def _sigmoid(v):
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    e = np.exp(v[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def sigmoid(a: Node) -> Node:
    def vjp(g):
        return (mul(g, mul(out, sub(1.0, out))),)

    out = _record("sigmoid", _sigmoid(np.atleast_1d(a.value)).reshape(a.shape), (a,), vjp)
    return out


def tanh(a: Node) -> Node:
    def vjp(g):
        return (mul(g, sub(1.0, square(out))),)

    out = _record("tanh", np.tanh(a.value), (a,), vjp)
    return out


# ---------------------------------------------------------------------------
# reductions and reshaping


def expand(a: Node, shape: tuple, axis: int | None) -> Node:
    """Broadcast the result of a reduction back to ``shape``.

    ``axis=None`` means ``a`` is a scalar; otherwise ``a`` has ``shape`` with
    ``axis`` removed.
    """
    shape = tuple(shape)
    if axis is None:
        val = np.broadcast_to(a.value, shape).copy()
    else:
        val = np.broadcast_to(np.expand_dims(a.value, axis), shape).copy()
    return _record("expand", val, (a,), lambda g: (sum(g, axis=axis),))


def sum(a: Node, axis: int | None = None) -> Node:  # noqa: A001
    shape = a.shape
    return _record("sum", a.value.sum(axis=axis), (a,), lambda g: (expand(g, shape, axis),))


def mean(a: Node, axis: int | None = None) -> Node:
    n = a.value.size if axis is None else a.shape[axis]
    if n == 0:
        raise ShapeError("mean: empty input")
    return scale(sum(a, axis=axis), 1.0 / n)


def norm(a: Node, axis: int | None = None) -> Node:
    """Euclidean norm; the adjoint at the origin is taken to be zero."""
    shape = a.shape
    val = np.sqrt((a.value * a.value).sum(axis=axis))

    def vjp(g):
        mask = (out.value > 0).astype(np.float64)
        # denominator stays on the tape where the norm is positive, 1 elsewhere
        denom = add(mul(out, Node(mask)), Node(1.0 - mask))
        coef = mul(mul(g, Node(mask)), reciprocal(denom))
        return (mul(expand(coef, shape, axis), a),)

    out = _record("norm", val, (a,), vjp)
    return out


def concat(nodes: Sequence[Node], axis: int = 0) -> Node:
    nodes = [_as_node(n) for n in nodes]
    sizes = [n.shape[axis] for n in nodes]
    offsets = np.cumsum([0] + sizes)
    for n in nodes[1:]:
        others = [s for i, s in enumerate(n.shape) if i != axis]
        ref = [s for i, s in enumerate(nodes[0].shape) if i != axis]
        if others != ref:
            raise ShapeError(f"concat: shape mismatch {nodes[0].shape} vs {n.shape}")

    def vjp(g):
        return tuple(
            _slice_axis(g, int(offsets[i]), int(offsets[i + 1]), axis) for i in range(len(nodes))
        )

    return _record("concat", np.concatenate([n.value for n in nodes], axis=axis), tuple(nodes), vjp)


def _slice_axis(a: Node, start: int, stop: int, axis: int) -> Node:
    index = [slice(None)] * a.value.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)
    shape = a.shape

    def vjp(g):
        return (_pad_axis(g, shape, start, axis),)

    return _record("slice", a.value[index], (a,), vjp)


def _pad_axis(a: Node, shape, start: int, axis: int) -> Node:
    stop = start + a.shape[axis]
    val = np.zeros(shape)
    index = [slice(None)] * len(shape)
    index[axis] = slice(start, stop)
    val[tuple(index)] = a.value
    return _record("pad", val, (a,), lambda g: (_slice_axis(g, start, stop, axis),))


def slice_rows(a: Node, start: int, stop: int) -> Node:
    if not 0 <= start <= stop <= a.shape[0]:
        raise ShapeError(f"slice: [{start}:{stop}] out of range for {a.shape}")
    return _slice_axis(a, start, stop, 0)


# ---------------------------------------------------------------------------
# backward pass


def _topo_order(root: Node) -> list[Node]:
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if node.uid in seen:
            continue
        seen.add(node.uid)
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and p.uid not in seen:
                stack.append((p, False))
    return order


def backward(root: Node, wrt: Sequence[Node], create_graph: bool = False) -> list[Node]:
    """Gradients of a scalar ``root`` with respect to each node in ``wrt``.

    With ``create_graph`` the returned gradients are recorded nodes that can
    be differentiated again; otherwise they are constants.
    """
    if root.value.shape != ():
        raise AutodiffError(f"backward needs a scalar root, got shape {root.shape}")
    grads: dict[int, Node] = {}
    if root.requires_grad:
        grads[root.uid] = Node(np.ones(()))
    ctx = contextlib.nullcontext() if create_graph else no_grad()
    with ctx:
        for node in reversed(_topo_order(root)):
            g = grads.get(node.uid)
            if g is None or node.vjp is None:
                continue
            parent_grads = node.vjp(g)
            for p, pg in zip(node.parents, parent_grads):
                if not p.requires_grad:
                    continue
                if np.isnan(pg.value).any():
                    raise AutodiffError(f"NaN adjoint produced by op {node.op!r}")
                prev = grads.get(p.uid)
                grads[p.uid] = pg if prev is None else add(prev, pg)
    out = []
    for w in wrt:
        g = grads.get(w.uid)
        if g is None:
            g = Node(np.zeros(w.shape))
        elif not create_graph:
            g = Node(g.value)
        out.append(g)
    return out


def grad_fn(f: Callable[..., Node]) -> Callable[..., list[np.ndarray]]:
    """Wrap ``f(*nodes) -> scalar`` into a function returning numpy gradients."""

    def wrapped(*arrays):
        leaves = [variable(a) for a in arrays]
        return [g.value for g in backward(f(*leaves), leaves)]

    return wrapped
