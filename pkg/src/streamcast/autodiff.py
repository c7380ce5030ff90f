"""Tape-based reverse-mode differentiation over small dense float64 arrays.

A :class:`Graph` records every operation applied to its tensors in creation
order. :func:`backward` walks that tape in reverse exactly once, so the
gradient of a scalar loss with respect to every registered parameter is
available after a single sweep.

Only what the forecast model needs is provided: affine algebra, a handful of
elementwise nonlinearities, slicing/concatenation, reductions and a fused
LSTM sequence primitive with hand-written backpropagation through time.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

__all__ = [
    "ShapeError",
    "Graph",
    "Tensor",
    "backward",
    "matmul",
    "add",
    "sub",
    "mul",
    "neg",
    "sigmoid",
    "tanh",
    "softplus",
    "exp",
    "log",
    "reciprocal",
    "relu",
    "clip",
    "take",
    "concat",
    "reshape",
    "sum",
    "mean",
    "lstm",
]

MAX_RANK = 3


class ShapeError(ValueError):
    """Operands have incompatible shapes."""

    def __init__(self, op, *shapes):
        self.op = op
        self.shapes = shapes
        super().__init__(f"{op}: incompatible shapes {' and '.join(map(str, shapes))}")


class Tensor:
    __slots__ = ("value", "grad", "graph", "parents", "backward_fn", "name")

    def __init__(self, value, graph, parents=(), backward_fn=None, name=None):
        value = np.asarray(value, dtype=np.float64)
        if value.ndim > MAX_RANK:
            raise ShapeError("tensor", value.shape)
        self.value = value
        self.grad = None
        self.graph = graph
        self.parents = parents
        self.backward_fn = backward_fn
        self.name = name
        graph.nodes.append(self)

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return take(self, index)


class Graph:
    """Operation tape plus a registry of named leaf parameters."""

    def __init__(self):
        self.nodes: list[Tensor] = []
        self.params: dict[str, Tensor] = {}

    def param(self, name: str, value) -> Tensor:
        if name in self.params:
            raise KeyError(f"parameter {name!r} already registered")
        t = Tensor(np.array(value, dtype=np.float64), self, name=name)
        self.params[name] = t
        return t

    def const(self, value) -> Tensor:
        return Tensor(value, self)


def _graph_of(*xs) -> Graph:
    for x in xs:
        if isinstance(x, Tensor):
            return x.graph
    raise TypeError("at least one operand must be a Tensor")


def _lift(x, graph: Graph) -> Tensor:
    if isinstance(x, Tensor):
        if x.graph is not graph:
            raise ValueError("operands belong to different graphs")
        return x
    return graph.const(x)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _node(value, parents, backward_fn) -> Tensor:
    return Tensor(value, parents[0].graph, tuple(parents), backward_fn)


def backward(graph: Graph, loss: Tensor) -> dict[str, np.ndarray]:
    """Accumulate d(loss)/d(node) for every node on the tape.

    Returns the gradients of all registered parameters, keyed by name.
    Parameters the loss does not depend on get an exact zero gradient.
    """
    if loss.graph is not graph:
        raise ValueError("loss does not belong to this graph")
    if loss.value.size != 1:
        raise ValueError(f"backward requires a scalar loss, got shape {loss.shape}")
    for node in graph.nodes:
        node.grad = None
    loss.grad = np.ones_like(loss.value)
    # creation order is a topological order, so reverse it
    for node in reversed(graph.nodes):
        if node.grad is None or node.backward_fn is None:
            continue
        parent_grads = node.backward_fn(node.grad)
        for parent, g in zip(node.parents, parent_grads):
            if g is None:
                continue
            if parent.grad is None:
                parent.grad = np.array(g, dtype=np.float64)
            else:
                parent.grad = parent.grad + g
    return {
        name: (p.grad if p.grad is not None else np.zeros_like(p.value))
        for name, p in graph.params.items()
    }


# --------------------------------------------------------------------------
# algebra


def matmul(a, b) -> Tensor:
    g = _graph_of(a, b)
    a, b = _lift(a, g), _lift(b, g)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)
    av, bv = a.value, b.value

    def bw(grad):
        return grad @ bv.T, av.T @ grad

    return _node(av @ bv, (a, b), bw)


def _broadcast_shape(op, a, b):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(op, a.shape, b.shape) from None


def add(a, b) -> Tensor:
    g = _graph_of(a, b)
    a, b = _lift(a, g), _lift(b, g)
    _broadcast_shape("add", a, b)

    def bw(grad):
        return _unbroadcast(grad, a.shape), _unbroadcast(grad, b.shape)

    return _node(a.value + b.value, (a, b), bw)


def sub(a, b) -> Tensor:
    g = _graph_of(a, b)
    a, b = _lift(a, g), _lift(b, g)
    _broadcast_shape("sub", a, b)

    def bw(grad):
        return _unbroadcast(grad, a.shape), -_unbroadcast(grad, b.shape)

    return _node(a.value - b.value, (a, b), bw)


def mul(a, b) -> Tensor:
    g = _graph_of(a, b)
    a, b = _lift(a, g), _lift(b, g)
    _broadcast_shape("mul", a, b)
    av, bv = a.value, b.value

    def bw(grad):
        return _unbroadcast(grad * bv, a.shape), _unbroadcast(grad * av, b.shape)

    return _node(av * bv, (a, b), bw)


def neg(a: Tensor) -> Tensor:
    return _node(-a.value, (a,), lambda grad: (-grad,))


# --------------------------------------------------------------------------
# elementwise


def _unary(a: Tensor, value: np.ndarray, local_grad: Callable[[], np.ndarray]):
    return _node(value, (a,), lambda grad: (grad * local_grad(),))


_sigmoid = expit


def sigmoid(a: Tensor) -> Tensor:
    s = _sigmoid(a.value)
    return _unary(a, s, lambda: s * (1.0 - s))


def tanh(a: Tensor) -> Tensor:
    t = np.tanh(a.value)
    return _unary(a, t, lambda: 1.0 - t * t)


def softplus(a: Tensor) -> Tensor:
    x = a.value
    return _unary(a, np.logaddexp(0.0, x), lambda: _sigmoid(x))


def exp(a: Tensor) -> Tensor:
    e = np.exp(a.value)
    return _unary(a, e, lambda: e)


def log(a: Tensor) -> Tensor:
    x = a.value
    return _unary(a, np.log(x), lambda: 1.0 / x)


def reciprocal(a: Tensor) -> Tensor:
    r = 1.0 / a.value
    return _unary(a, r, lambda: -r * r)


def relu(a: Tensor) -> Tensor:
    x = a.value
    return _unary(a, np.maximum(x, 0.0), lambda: (x > 0).astype(np.float64))


def clip(a: Tensor, lo=None, hi=None) -> Tensor:
    """Clamp to [lo, hi]; the gradient is zero where the bound is active."""
    x = a.value
    lo_ = -np.inf if lo is None else lo
    hi_ = np.inf if hi is None else hi
    inside = ((x >= lo_) & (x <= hi_)).astype(np.float64)
    return _unary(a, np.clip(x, lo_, hi_), lambda: inside)


# --------------------------------------------------------------------------
# structure


def take(a: Tensor, index) -> Tensor:
    """Basic (slice/integer) indexing."""
    shape = a.shape

    def bw(grad):
        full = np.zeros(shape)
        full[index] = grad
        return (full,)

    return _node(a.value[index], (a,), bw)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    g = _graph_of(*tensors)
    ts = [_lift(t, g) for t in tensors]
    try:
        value = np.concatenate([t.value for t in ts], axis=axis)
    except ValueError:
        raise ShapeError("concat", *[t.shape for t in ts]) from None
    bounds = np.cumsum([t.shape[axis] for t in ts])[:-1]

    def bw(grad):
        return tuple(np.split(grad, bounds, axis=axis))

    return _node(value, ts, bw)


def reshape(a: Tensor, shape) -> Tensor:
    old = a.shape
    try:
        value = a.value.reshape(shape)
    except ValueError:
        raise ShapeError("reshape", old, tuple(shape)) from None
    return _node(value, (a,), lambda grad: (grad.reshape(old),))


def sum(a: Tensor, axis=None) -> Tensor:  # noqa: A001
    shape = a.shape

    def bw(grad):
        if axis is not None:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad, shape).copy(),)

    return _node(a.value.sum(axis=axis), (a,), bw)


def mean(a: Tensor, axis=None) -> Tensor:
    n = a.value.size if axis is None else a.shape[axis]
    return mul(sum(a, axis=axis), 1.0 / n)


# --------------------------------------------------------------------------
# recurrent primitive


def lstm(x, w_ih: Tensor, w_hh: Tensor, bias: Tensor, h0, c0) -> Tensor:
    """Run an LSTM over ``x`` of shape (batch, time, features).

    Gate blocks are ordered input, forget, cell candidate, output. Returns a
    (batch, time, 2*hidden) tensor holding ``[h_t, c_t]`` for every step.
    """
    g = _graph_of(x, w_ih, w_hh, bias, h0, c0)
    x, w_ih, w_hh, bias, h0, c0 = (_lift(t, g) for t in (x, w_ih, w_hh, bias, h0, c0))
    xv = x.value
    if xv.ndim != 3:
        raise ShapeError("lstm", xv.shape)
    n_batch, n_time, n_feat = xv.shape
    hidden = w_hh.shape[0]
    if w_ih.shape != (n_feat, 4 * hidden):
        raise ShapeError("lstm", xv.shape, w_ih.shape)
    if w_hh.shape != (hidden, 4 * hidden) or bias.shape != (4 * hidden,):
        raise ShapeError("lstm", w_hh.shape, bias.shape)
    if h0.shape != (n_batch, hidden) or c0.shape != (n_batch, hidden):
        raise ShapeError("lstm", h0.shape, c0.shape)

    H = hidden
    Wi, Wh, b = w_ih.value, w_hh.value, bias.value
    gates = np.empty((n_time, n_batch, 4 * H))
    cs = np.empty((n_time + 1, n_batch, H))
    hs = np.empty((n_time + 1, n_batch, H))
    hs[0], cs[0] = h0.value, c0.value
    xin = xv @ Wi + b  # (B, T, 4H)
    for t in range(n_time):
        z = xin[:, t] + hs[t] @ Wh
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H : 2 * H])
        cand = np.tanh(z[:, 2 * H : 3 * H])
        o = _sigmoid(z[:, 3 * H :])
        gates[t] = np.concatenate([i, f, cand, o], axis=1)
        cs[t + 1] = f * cs[t] + i * cand
        hs[t + 1] = o * np.tanh(cs[t + 1])
    out = np.concatenate([hs[1:], cs[1:]], axis=2).transpose(1, 0, 2)

    def bw(grad):
        d_hs = grad[:, :, :H]
        d_cs = grad[:, :, H:]
        dz_all = np.empty((n_batch, n_time, 4 * H))
        dWh = np.zeros_like(Wh)
        dh_next = np.zeros((n_batch, H))
        dc_next = np.zeros((n_batch, H))
        for t in range(n_time - 1, -1, -1):
            i, f, cand, o = np.split(gates[t], 4, axis=1)
            tc = np.tanh(cs[t + 1])
            dh = d_hs[:, t] + dh_next
            dc = d_cs[:, t] + dc_next + dh * o * (1.0 - tc * tc)
            dz = np.concatenate(
                [
                    dc * cand * i * (1.0 - i),
                    dc * cs[t] * f * (1.0 - f),
                    dc * i * (1.0 - cand * cand),
                    dh * tc * o * (1.0 - o),
                ],
                axis=1,
            )
            dz_all[:, t] = dz
            dWh += hs[t].T @ dz
            dh_next = dz @ Wh.T
            dc_next = dc * f
        dx = dz_all @ Wi.T
        dWi = np.einsum("btf,btg->fg", xv, dz_all)
        db = dz_all.sum(axis=(0, 1))
        return dx, dWi, dWh, db, dh_next, dc_next

    return _node(out, (x, w_ih, w_hh, bias, h0, c0), bw)
