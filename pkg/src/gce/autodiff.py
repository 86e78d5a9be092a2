"""Minimal reverse-mode automatic differentiation over numpy arrays.

Supports exactly the operations the message-passing classifier and the
subgraph autoencoder need: broadcast arithmetic, (batched) matmul, the usual
nonlinearities, reductions with subgradient conventions (max routes to the
first argmax), stable log-softmax / binary cross-entropy, concatenation,
stacking, and scatter-style embedding of small blocks into larger arrays.
Everything is float64; gradients are exact, which the finite-difference test
suites verify end to end.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Var", "const"]


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Var:
    """A node in the computation tape."""

    __slots__ = ("value", "grad", "parents", "requires_grad")

    def __init__(self, value, parents=(), requires_grad=None):
        self.value = np.asarray(value, dtype=np.float64)
        had_parents = bool(parents)
        self.parents = tuple((p, fn) for p, fn in parents if p.requires_grad)
        if requires_grad is None:
            # leaves require grad by default; op nodes only if some parent does
            requires_grad = bool(self.parents) if had_parents else True
        self.requires_grad = requires_grad
        self.grad = None

    # -- graph walking ------------------------------------------------------

    def backward(self) -> None:
        if self.value.size != 1:
            raise ValueError("backward() expects a scalar root")
        topo: list[Var] = []
        seen: set[int] = set()
        stack: list[tuple[Var, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent, _ in node.parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.value)
        for node in reversed(topo):
            if node.grad is None:
                continue
            for parent, fn in node.parents:
                contribution = fn(node.grad)
                if parent.grad is None:
                    parent.grad = np.zeros_like(parent.value)
                parent.grad = parent.grad + contribution

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = wrap(other)
        return Var(
            self.value + other.value,
            (
                (self, lambda g: _unbroadcast(g, self.value.shape)),
                (other, lambda g: _unbroadcast(g, other.value.shape)),
            ),
        )

    __radd__ = __add__

    def __neg__(self):
        return Var(-self.value, ((self, lambda g: -g),))

    def __sub__(self, other):
        return self + (-wrap(other))

    def __rsub__(self, other):
        return wrap(other) + (-self)

    def __mul__(self, other):
        other = wrap(other)
        return Var(
            self.value * other.value,
            (
                (self, lambda g: _unbroadcast(g * other.value, self.value.shape)),
                (other, lambda g: _unbroadcast(g * self.value, other.value.shape)),
            ),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * power(wrap(other), -1.0)

    def __rtruediv__(self, other):
        return wrap(other) * power(self, -1.0)

    def __matmul__(self, other):
        other = wrap(other)
        a, b = self.value, other.value
        return Var(
            a @ b,
            (
                (self, lambda g: _unbroadcast(g @ np.swapaxes(b, -1, -2), a.shape)),
                (other, lambda g: _unbroadcast(np.swapaxes(a, -1, -2) @ g, b.shape)),
            ),
        )

    def __getitem__(self, key):
        def back(g, key=key):
            out = np.zeros_like(self.value)
            np.add.at(out, key, g)
            return out

        return Var(self.value[key], ((self, back),))

    @property
    def shape(self):
        return self.value.shape


def wrap(x) -> Var:
    if isinstance(x, Var):
        return x
    return Var(np.asarray(x, dtype=np.float64), requires_grad=False)


def const(x) -> Var:
    return Var(np.asarray(x, dtype=np.float64), requires_grad=False)


# -- elementwise ------------------------------------------------------------


def power(x: Var, p: float) -> Var:
    out = np.power(x.value, p)
    return Var(out, ((x, lambda g: g * p * np.power(x.value, p - 1.0)),))


def exp(x: Var) -> Var:
    out = np.exp(x.value)
    return Var(out, ((x, lambda g: g * out),))


def log(x: Var) -> Var:
    return Var(np.log(x.value), ((x, lambda g: g / x.value),))


def sigmoid(x: Var) -> Var:
    out = 1.0 / (1.0 + np.exp(-x.value))
    return Var(out, ((x, lambda g: g * out * (1.0 - out)),))


def relu(x: Var) -> Var:
    mask = (x.value > 0).astype(np.float64)
    return Var(x.value * mask, ((x, lambda g: g * mask),))


def leaky_relu(x: Var, slope: float = 0.2) -> Var:
    mask = np.where(x.value > 0, 1.0, slope)
    return Var(x.value * mask, ((x, lambda g: g * mask),))


# -- reductions ---------------------------------------------------------------


def vsum(x: Var, axis=None, keepdims: bool = False) -> Var:
    out = x.value.sum(axis=axis, keepdims=keepdims)

    def back(g):
        if axis is None:
            return np.broadcast_to(g, x.value.shape).copy()
        gg = g if keepdims else np.expand_dims(g, axis)
        return np.broadcast_to(gg, x.value.shape).copy()

    return Var(out, ((x, back),))


def vmean(x: Var, axis=None, keepdims: bool = False) -> Var:
    count = x.value.size if axis is None else x.value.shape[axis]
    return vsum(x, axis=axis, keepdims=keepdims) * (1.0 / count)


def amax(x: Var, axis: int) -> Var:
    """Max along one axis; the gradient flows to the first argmax only."""
    out = x.value.max(axis=axis)
    idx = np.expand_dims(x.value.argmax(axis=axis), axis)

    def back(g):
        grad = np.zeros_like(x.value)
        np.put_along_axis(grad, idx, np.expand_dims(g, axis), axis=axis)
        return grad

    return Var(out, ((x, back),))


# -- softmax family -----------------------------------------------------------


def log_softmax(x: Var, axis: int = -1) -> Var:
    shifted = x.value - x.value.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse
    soft = np.exp(out)

    def back(g):
        return g - soft * g.sum(axis=axis, keepdims=True)

    return Var(out, ((x, back),))


def softmax(x: Var, axis: int = -1) -> Var:
    shifted = x.value - x.value.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def back(g):
        return out * (g - (g * out).sum(axis=axis, keepdims=True))

    return Var(out, ((x, back),))


def bce_with_logits(logits: Var, targets: np.ndarray) -> Var:
    """Sum of elementwise binary cross-entropy, stable in the logits."""
    u, t = logits.value, np.asarray(targets, dtype=np.float64)
    out = np.maximum(u, 0.0) - u * t + np.log1p(np.exp(-np.abs(u)))
    sig = 1.0 / (1.0 + np.exp(-u))
    return Var(out.sum(), ((logits, lambda g: g * (sig - t)),))


# -- shape surgery ------------------------------------------------------------


def reshape(x: Var, shape) -> Var:
    old = x.value.shape
    return Var(x.value.reshape(shape), ((x, lambda g: g.reshape(old)),))


def swapaxes(x: Var, a: int, b: int) -> Var:
    return Var(np.swapaxes(x.value, a, b), ((x, lambda g: np.swapaxes(g, a, b)),))


def concat(parts: list[Var], axis: int = 0) -> Var:
    parts = [wrap(p) for p in parts]
    sizes = [p.value.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def make_back(i):
        sl = [slice(None)] * parts[i].value.ndim
        sl[axis] = slice(offsets[i], offsets[i + 1])
        return lambda g: g[tuple(sl)]

    return Var(
        np.concatenate([p.value for p in parts], axis=axis),
        tuple((parts[i], make_back(i)) for i in range(len(parts))),
    )


def stack(parts: list[Var], axis: int = 0) -> Var:
    parts = [wrap(p) for p in parts]

    def make_back(i):
        return lambda g: np.take(g, i, axis=axis)

    return Var(
        np.stack([p.value for p in parts], axis=axis),
        tuple((parts[i], make_back(i)) for i in range(len(parts))),
    )


# -- scatter-style embeddings -------------------------------------------------


def embed_block(x: Var, rows: np.ndarray, cols: np.ndarray, shape: tuple[int, int]) -> Var:
    """Place a small (r, c) matrix into a zero (R, C) matrix at given indices."""
    out = np.zeros(shape)
    out[np.ix_(rows, cols)] = x.value
    return Var(out, ((x, lambda g: g[np.ix_(rows, cols)]),))


def embed_rows(x: Var, rows: np.ndarray, shape: tuple[int, int]) -> Var:
    out = np.zeros(shape)
    out[rows] = x.value
    return Var(out, ((x, lambda g: g[rows]),))


def embed_block3(
    x: Var, rows: np.ndarray, cols: np.ndarray, shape: tuple[int, int, int]
) -> Var:
    """Place a small (r, c, k) tensor into a zero (R, C, k) tensor."""
    out = np.zeros(shape)
    out[np.ix_(rows, cols)] = x.value
    return Var(out, ((x, lambda g: g[np.ix_(rows, cols)]),))


def ut_to_symmetric(v: Var, n: int) -> Var:
    """Spread an upper-triangle vector into a symmetric zero-diagonal matrix."""
    iu = np.triu_indices(n, k=1)
    out = np.zeros((n, n))
    out[iu] = v.value
    out = out + out.T

    def back(g):
        return g[iu] + np.swapaxes(g, -1, -2)[iu]

    return Var(out, ((v, back),))


def ut_to_symmetric3(v: Var, n: int, k: int) -> Var:
    """Spread (slots, k) upper-triangle vectors into a (n, n, k) tensor, both
    directions of every slot carrying the same vector."""
    iu = np.triu_indices(n, k=1)
    out = np.zeros((n, n, k))
    out[iu] = v.value
    out = out + np.swapaxes(out, 0, 1)

    def back(g):
        return g[iu] + np.swapaxes(g, 0, 1)[iu]

    return Var(out, ((v, back),))
