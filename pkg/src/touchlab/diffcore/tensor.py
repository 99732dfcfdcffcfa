"""Reverse-mode automatic differentiation over numpy arrays.

A Tensor wraps a float64 ndarray and remembers how it was produced; calling
backward() on a scalar walks the graph in reverse topological order and
accumulates gradients. The graph is rebuilt on every forward pass (define by
run), so evaluating the same module twice never aliases state. All math is
float64 end to end.
"""

import contextlib

import numpy as np

from ..errors import ConfigurationError

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph construction inside the block (pure evaluation)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, parents=(), backward=None, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad) and _grad_enabled
        self._parents = parents if self.requires_grad else ()
        self._backward = backward if self.requires_grad else None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad = self.grad + g

    def backward(self):
        if self.data.size != 1:
            raise ConfigurationError("backward() requires a scalar root")
        order = _toposort(self)
        self._accumulate(np.ones_like(self.data))
        for node in reversed(order):
            if node._backward is not None:
                node._backward(node.grad)

    # Operator sugar; the named functions below are the primary API.
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def _toposort(root):
    order, seen, stack = [], set(), [(root, iter(root._parents))]
    seen.add(id(root))
    while stack:
        node, it = stack[-1]
        advanced = False
        for p in it:
            if id(p) not in seen and p.requires_grad:
                seen.add(id(p))
                stack.append((p, iter(p._parents)))
                advanced = True
                break
        if not advanced:
            order.append(node)
            stack.pop()
    return order


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g, shape):
    """Reduce gradient g back to the given operand shape after numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g.reshape(shape)


def _make(data, parents, backward):
    req = _grad_enabled and any(p.requires_grad for p in parents)
    if not req:
        return Tensor(data)
    return Tensor(data, requires_grad=True, parents=tuple(parents), backward=backward)


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.data.shape))

    return _make(out_data, (a, b), backward)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data - b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g, b.data.shape))

    return _make(out_data, (a, b), backward)


def neg(a):
    a = as_tensor(a)

    def backward(g):
        if a.requires_grad:
            a._accumulate(-g)

    return _make(-a.data, (a,), backward)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.data.shape))

    return _make(out_data, (a, b), backward)


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ConfigurationError(f"matmul expects 2-d operands, got {a.data.shape} @ {b.data.shape}")
    if a.data.shape[1] != b.data.shape[0]:
        raise ConfigurationError(f"matmul inner dims differ: {a.data.shape} @ {b.data.shape}")
    out_data = a.data @ b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(g @ b.data.T)
        if b.requires_grad:
            b._accumulate(a.data.T @ g)

    return _make(out_data, (a, b), backward)


def relu(a):
    a = as_tensor(a)
    mask = a.data > 0.0

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * mask)

    return _make(a.data * mask, (a,), backward)


def tanh(a):
    a = as_tensor(a)
    out_data = np.tanh(a.data)

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * (1.0 - out_data * out_data))

    return _make(out_data, (a,), backward)


def sigmoid(a):
    a = as_tensor(a)
    out_data = _sigmoid(a.data)

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * out_data * (1.0 - out_data))

    return _make(out_data, (a,), backward)


def _sigmoid(x):
    # Stable in both tails.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def elu(a, alpha=1.0):
    a = as_tensor(a)
    neg_mask = a.data < 0.0
    expm = np.where(neg_mask, np.expm1(np.minimum(a.data, 0.0)), 0.0)
    out_data = np.where(neg_mask, alpha * expm, a.data)

    def backward(g):
        if a.requires_grad:
            local = np.where(neg_mask, alpha * (expm + 1.0), 1.0)
            a._accumulate(g * local)

    return _make(out_data, (a,), backward)


def square(a):
    a = as_tensor(a)

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * 2.0 * a.data)

    return _make(a.data * a.data, (a,), backward)


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                t._accumulate(g[tuple(idx)])

    return _make(out_data, tuple(tensors), backward)


def slice_axis(a, start, stop, axis=-1):
    a = as_tensor(a)
    idx = [slice(None)] * a.data.ndim
    idx[axis] = slice(start, stop)
    idx = tuple(idx)

    def backward(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            full[idx] = g
            a._accumulate(full)

    return _make(a.data[idx], (a,), backward)


def reshape(a, shape):
    a = as_tensor(a)

    def backward(g):
        if a.requires_grad:
            a._accumulate(g.reshape(a.data.shape))

    return _make(a.data.reshape(shape), (a,), backward)


def tile_rows(a, times):
    """Repeat a single-row (1, n) tensor into (times, n)."""
    a = as_tensor(a)
    if a.data.shape[0] != 1:
        raise ConfigurationError("tile_rows expects a single-row tensor")
    out_data = np.broadcast_to(a.data, (times,) + a.data.shape[1:]).copy()

    def backward(g):
        if a.requires_grad:
            a._accumulate(g.sum(axis=0, keepdims=True))

    return _make(out_data, (a,), backward)


def t_sum(a, axis=None, keepdims=False):
    a = as_tensor(a)
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if a.requires_grad:
            if axis is None:
                a._accumulate(np.broadcast_to(g, a.data.shape).copy())
            else:
                gg = g if keepdims else np.expand_dims(g, axis)
                a._accumulate(np.broadcast_to(gg, a.data.shape).copy())

    return _make(out_data, (a,), backward)


def t_mean(a):
    a = as_tensor(a)
    n = a.data.size

    def backward(g):
        if a.requires_grad:
            a._accumulate(np.full(a.data.shape, float(g) / n))

    return _make(a.data.mean(), (a,), backward)


def softmax(a, axis=-1):
    a = as_tensor(a)
    z = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        if a.requires_grad:
            dot = (g * p).sum(axis=axis, keepdims=True)
            a._accumulate(p * (g - dot))

    return _make(p, (a,), backward)


def stack_last(tensors):
    """Stack equally-shaped tensors along a new trailing axis."""
    tensors = [as_tensor(t) for t in tensors]
    out_data = np.stack([t.data for t in tensors], axis=-1)

    def backward(g):
        for i, t in enumerate(tensors):
            if t.requires_grad:
                t._accumulate(g[..., i])

    return _make(out_data, tuple(tensors), backward)


def unitwise_linear(units, weight, bias):
    """Per-unit mixing scores: out[b,l,w] = sum_o units[b,l,o] * weight[l,o,w] + bias[l,w].

    units: (B, L, O) candidate activations per unit; weight: (L, O, W); bias: (L, W).
    """
    units, weight, bias = as_tensor(units), as_tensor(weight), as_tensor(bias)
    if units.data.ndim != 3 or weight.data.ndim != 3 or bias.data.ndim != 2:
        raise ConfigurationError("unitwise_linear expects (B,L,O), (L,O,W), (L,W)")
    if units.data.shape[1:] != weight.data.shape[:2] or weight.data.shape[::2] != (
        bias.data.shape
    ):
        raise ConfigurationError(
            f"unitwise_linear shape mismatch: {units.data.shape}, "
            f"{weight.data.shape}, {bias.data.shape}"
        )
    out_data = np.einsum("blo,low->blw", units.data, weight.data) + bias.data

    def backward(g):
        if units.requires_grad:
            units._accumulate(np.einsum("blw,low->blo", g, weight.data))
        if weight.requires_grad:
            weight._accumulate(np.einsum("blo,blw->low", units.data, g))
        if bias.requires_grad:
            bias._accumulate(g.sum(axis=0))

    return _make(out_data, (units, weight, bias), backward)


def sigmoid_cross_entropy(logits, targets):
    """Elementwise binary cross-entropy on logits; targets in [0, 1].

    Uses max(z,0) - z*t + log1p(exp(-|z|)), stable for large |z|.
    """
    logits = as_tensor(logits)
    t = np.asarray(targets, dtype=np.float64)
    if t.shape != logits.data.shape:
        raise ConfigurationError(f"target shape {t.shape} != logit shape {logits.data.shape}")
    if np.any(t < 0.0) or np.any(t > 1.0):
        from ..errors import InputError

        raise InputError("cross-entropy targets must lie in [0, 1]")
    z = logits.data
    out_data = np.maximum(z, 0.0) - z * t + np.log1p(np.exp(-np.abs(z)))

    def backward(g):
        if logits.requires_grad:
            logits._accumulate(g * (_sigmoid(z) - t))

    return _make(out_data, (logits,), backward)


def softmax_cross_entropy(logits, labels):
    """Row-wise multiclass cross-entropy; labels are integer class indices."""
    logits = as_tensor(logits)
    labels = np.asarray(labels)
    if logits.data.ndim != 2 or labels.shape != (logits.data.shape[0],):
        raise ConfigurationError("softmax_cross_entropy expects (B,C) logits and (B,) labels")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(z.shape[0])
    out_data = logsum - z[rows, labels]

    def backward(g):
        if logits.requires_grad:
            p = np.exp(z) / np.exp(z).sum(axis=1, keepdims=True)
            p[rows, labels] -= 1.0
            logits._accumulate(p * g[:, None])

    return _make(out_data, (logits,), backward)
