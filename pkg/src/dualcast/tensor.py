"""Reverse-mode autodiff on float64 numpy arrays.

A ``Tensor`` wraps an ``np.ndarray`` and records the op that produced it, so a
scalar loss can be differentiated with one backward sweep over the dynamically
built graph. The engine is deliberately small: only the ops the forecaster
needs exist, every op validates shapes up front, and any op that produces a
NaN or Inf raises :class:`NumericError` at the spot where the value appeared
instead of letting it travel. All data is float64; other dtypes are converted
on entry.

Gradients accumulate by summation, both when one node feeds several consumers
inside a single backward pass and across repeated backward calls on a leaf.
Interior graph links are dropped once consumed, so a graph is differentiated
at most once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, NumericError, ShapeError

__all__ = [
    "Tensor",
    "as_tensor",
    "concat",
    "finite_diff_check",
    "gather_rows",
    "gelu",
    "layer_norm",
    "pad_rows",
    "roll",
    "softmax",
    "GradCheckResult",
]


def _check_finite(data, op):
    if not np.all(np.isfinite(data)):
        raise NumericError(f"op '{op}' produced a non-finite value")


def _unbroadcast(grad, shape):
    """Sum `grad` back down to `shape` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False):
        arr = np.asarray(data, dtype=np.float64)
        _check_finite(arr, "tensor")
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None

    # -- construction -----------------------------------------------------

    @staticmethod
    def _make(data, parents, backward, op):
        """Build a non-leaf tensor; graph links only if a parent needs grad."""
        _check_finite(data, op)
        out = Tensor.__new__(Tensor)
        out.data = data
        out.grad = None
        out.requires_grad = any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = tuple(parents)
            out._backward = backward
        else:
            out._parents = ()
            out._backward = None
        return out

    # -- basic introspection ----------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Tensor):
            data = self.data + other.data

            def backward(g):
                return (_unbroadcast(g, self.shape), _unbroadcast(g, other.shape))

            return Tensor._make(data, (self, other), backward, "add")
        data = self.data + other
        return Tensor._make(data, (self,), lambda g: (_unbroadcast(g, self.shape),), "add")

    __radd__ = __add__

    def __neg__(self):
        return Tensor._make(-self.data, (self,), lambda g: (-g,), "neg")

    def __sub__(self, other):
        if isinstance(other, Tensor):
            data = self.data - other.data

            def backward(g):
                return (_unbroadcast(g, self.shape), _unbroadcast(-g, other.shape))

            return Tensor._make(data, (self, other), backward, "sub")
        data = self.data - other
        return Tensor._make(data, (self,), lambda g: (_unbroadcast(g, self.shape),), "sub")

    def __rsub__(self, other):
        data = other - self.data
        return Tensor._make(data, (self,), lambda g: (_unbroadcast(-g, self.shape),), "rsub")

    def __mul__(self, other):
        if isinstance(other, Tensor):
            data = self.data * other.data

            def backward(g):
                return (
                    _unbroadcast(g * other.data, self.shape),
                    _unbroadcast(g * self.data, other.shape),
                )

            return Tensor._make(data, (self, other), backward, "mul")
        data = self.data * other
        return Tensor._make(
            data, (self,), lambda g: (_unbroadcast(g * other, self.shape),), "mul"
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            data = self.data / other.data

            def backward(g):
                return (
                    _unbroadcast(g / other.data, self.shape),
                    _unbroadcast(-g * self.data / (other.data * other.data), other.shape),
                )

            return Tensor._make(data, (self, other), backward, "div")
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        data = other / self.data

        def backward(g):
            return (_unbroadcast(-g * other / (self.data * self.data), self.shape),)

        return Tensor._make(data, (self,), backward, "rdiv")

    def __pow__(self, exponent):
        if not isinstance(exponent, (int, float)):
            raise ContractError("pow only supports a constant scalar exponent")
        data = self.data ** exponent

        def backward(g):
            return (g * exponent * self.data ** (exponent - 1),)

        return Tensor._make(data, (self,), backward, "pow")

    def __matmul__(self, other):
        if not isinstance(other, Tensor):
            other = Tensor(other)
        if self.ndim != 2 or other.ndim != 2 or self.shape[1] != other.shape[0]:
            raise ShapeError(
                f"matmul needs (m,k) @ (k,n); got {self.shape} @ {other.shape}"
            )
        data = self.data @ other.data

        def backward(g):
            return (g @ other.data.T, self.data.T @ g)

        return Tensor._make(data, (self, other), backward, "matmul")

    # -- structure ----------------------------------------------------------

    @property
    def T(self):
        if self.ndim != 2:
            raise ShapeError(f"transpose expects a 2-d tensor, got shape {self.shape}")
        return Tensor._make(self.data.T, (self,), lambda g: (g.T,), "transpose")

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        old = self.shape
        data = self.data.reshape(shape)
        return Tensor._make(data, (self,), lambda g: (g.reshape(old),), "reshape")

    def __getitem__(self, key):
        data = self.data[key]
        if np.isscalar(data) or data.ndim == 0:
            data = np.asarray(data, dtype=np.float64).reshape(())

        def backward(g):
            full = np.zeros_like(self.data)
            full[key] = g
            return (full,)

        return Tensor._make(np.asarray(data), (self,), backward, "getitem")

    def sum(self, axis=None, keepdims=False):
        data = self.data.sum(axis=axis, keepdims=keepdims)

        def backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, self.shape).copy(),)

        return Tensor._make(np.asarray(data), (self,), backward, "sum")

    def mean(self, axis=None, keepdims=False):
        if axis is None:
            count = self.size
        else:
            count = self.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def sqrt(self):
        if np.any(self.data < 0):
            raise ContractError("sqrt requires non-negative input")
        data = np.sqrt(self.data)

        def backward(g):
            return (g * 0.5 / data,)

        return Tensor._make(data, (self,), backward, "sqrt")

    # -- backward -----------------------------------------------------------

    def backward(self):
        """Differentiate a scalar; populates .grad on requires_grad leaves."""
        if self.data.size != 1:
            raise ContractError(
                f"backward needs a scalar loss, got shape {self.shape}"
            )
        topo = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        grads = {id(self): np.ones_like(self.data)}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                if node.requires_grad:
                    node.grad = g if node.grad is None else node.grad + g
                continue
            parent_grads = node._backward(g)
            for parent, pg in zip(node._parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                _check_finite(pg, "backward")
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg
            node._parents = ()
            node._backward = None


def as_tensor(x, requires_grad=False):
    return x if isinstance(x, Tensor) else Tensor(x, requires_grad=requires_grad)


# -- ops that are not methods ------------------------------------------------


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        return tuple(
            np.take(g, range(offsets[i], offsets[i + 1]), axis=axis)
            for i in range(len(tensors))
        )

    return Tensor._make(data, tuple(tensors), backward, "concat")


def pad_rows(x, start, total):
    """Place the rows of `x` at [start, start+len) inside `total` zero rows."""
    n = x.shape[0]
    if start < 0 or start + n > total:
        raise ContractError(
            f"pad_rows: rows [{start}, {start + n}) do not fit in {total}"
        )
    data = np.zeros((total,) + x.shape[1:], dtype=np.float64)
    data[start : start + n] = x.data

    def backward(g):
        return (g[start : start + n].copy(),)

    return Tensor._make(data, (x,), backward, "pad_rows")


def gather_rows(x, indices):
    indices = np.asarray(indices, dtype=np.intp)
    data = x.data[indices]

    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, indices, g)
        return (full,)

    return Tensor._make(data, (x,), backward, "gather_rows")


def roll(x, shift, axis=0):
    """Circular shift with numpy semantics: out[t] = x[(t - shift) mod n]."""
    data = np.roll(x.data, shift, axis=axis)

    def backward(g):
        return (np.roll(g, -shift, axis=axis),)

    return Tensor._make(data, (x,), backward, "roll")


def softmax(x, axis=-1):
    """Shift-stable softmax along `axis`; rows sum to 1."""
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        inner = (g * out).sum(axis=axis, keepdims=True)
        return (out * (g - inner),)

    return Tensor._make(out, (x,), backward, "softmax")


_GELU_C = math.sqrt(2.0 / math.pi)


def gelu(x):
    """GELU, tanh form: 0.5 x (1 + tanh(c (x + 0.044715 x^3)))."""
    u = _GELU_C * (x.data + 0.044715 * x.data**3)
    t = np.tanh(u)
    out = 0.5 * x.data * (1.0 + t)

    def backward(g):
        du = _GELU_C * (1.0 + 3 * 0.044715 * x.data**2)
        return (g * (0.5 * (1.0 + t) + 0.5 * x.data * (1.0 - t * t) * du),)

    return Tensor._make(out, (x,), backward, "gelu")


def layer_norm(x, gain, bias, eps=1e-5):
    """Normalize the last axis to zero mean / unit variance, then affine.

    Composed from primitive ops, so the gradient follows from the pieces.
    """
    mu = x.mean(axis=-1, keepdims=True)
    centered = x - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    normed = centered / (var + eps).sqrt()
    return normed * gain + bias


# -- gradient verification ----------------------------------------------------


@dataclass
class GradCheckResult:
    max_rel_err: float
    rel_err: np.ndarray
    analytic: np.ndarray
    numeric: np.ndarray


def finite_diff_check(f, x, step=1e-6):
    """Compare backward gradients of scalar-valued `f` against central differences.

    Relative error per coordinate is |analytic - numeric| over
    (|analytic| + |numeric| + 1e-12); the result carries the elementwise map
    and its max. `f` must be a pure function of its tensor argument.
    """
    x = as_tensor(x, requires_grad=True)
    x.requires_grad = True
    x.grad = None
    out = f(x)
    if out.data.size != 1:
        raise ContractError("finite_diff_check needs a scalar-valued function")
    out.backward()
    analytic = (
        x.grad.copy() if x.grad is not None else np.zeros_like(x.data)
    )
    flat = x.data.reshape(-1)
    numeric = np.zeros_like(flat)
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + step
        hi = float(f(Tensor(x.data)).data)
        flat[i] = saved - step
        lo = float(f(Tensor(x.data)).data)
        flat[i] = saved
        numeric[i] = (hi - lo) / (2.0 * step)
    numeric = numeric.reshape(x.data.shape)
    rel = np.abs(analytic - numeric) / (np.abs(analytic) + np.abs(numeric) + 1e-12)
    return GradCheckResult(float(rel.max()), rel, analytic, numeric)
