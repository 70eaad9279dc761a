"""
Minimal reverse-mode differentiation over dense float64 arrays.

Every operation on a :class:`Tensor` records its parents and a closure that
maps the output gradient to parent gradients. :meth:`Tensor.backward` walks
the recorded graph in reverse topological order.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, DimensionError

__all__ = [
    "Tensor",
    "Parameter",
    "as_tensor",
    "concat_cols",
    "segment_sum",
    "spmm",
    "standardize_columns",
]


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __array_priority__ = 1000

    def __init__(self, data, requires_grad=False, parents=(), backward_fn=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = parents if self.requires_grad else ()
        self._backward_fn = backward_fn if self.requires_grad else None

    # ------------------------------------------------------------------
    # bookkeeping
    # ------------------------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def T(self):
        return self.transpose()

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def is_finite(self):
        return bool(np.all(np.isfinite(self.data)))

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad = self.grad + g

    def backward(self):
        if self.data.size != 1:
            raise ContractError(f"backward() needs a scalar loss, got shape {self.shape}")
        order, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))

        grads = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward_fn is None:
                node._accumulate(g)
                continue
            for parent, pg in zip(node._parents, node._backward_fn(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = grads[key] + pg if key in grads else pg

    # ------------------------------------------------------------------
    # elementwise arithmetic
    # ------------------------------------------------------------------
    def __add__(self, other):
        other = as_tensor(other)
        a, b = self.shape, other.shape
        return Tensor(
            self.data + other.data,
            parents=(self, other),
            backward_fn=lambda g: (_unbroadcast(g, a), _unbroadcast(g, b)),
        )

    __radd__ = __add__

    def __neg__(self):
        return Tensor(-self.data, parents=(self,), backward_fn=lambda g: (-g,))

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __mul__(self, other):
        other = as_tensor(other)
        x, y = self.data, other.data

        def bw(g):
            return _unbroadcast(g * y, x.shape), _unbroadcast(g * x, y.shape)

        return Tensor(x * y, parents=(self, other), backward_fn=bw)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)
        x, y = self.data, other.data
        out = x / y

        def bw(g):
            return _unbroadcast(g / y, x.shape), _unbroadcast(-g * out / y, y.shape)

        return Tensor(out, parents=(self, other), backward_fn=bw)

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __pow__(self, exponent):
        if isinstance(exponent, Tensor):
            raise TypeError("only constant exponents are supported")
        x = self.data
        if exponent == 2:
            return Tensor(x * x, parents=(self,), backward_fn=lambda g: (2.0 * x * g,))
        return Tensor(
            x**exponent,
            parents=(self,),
            backward_fn=lambda g: (exponent * x ** (exponent - 1) * g,),
        )

    def sqrt(self):
        out = np.sqrt(self.data)
        return Tensor(out, parents=(self,), backward_fn=lambda g: (0.5 * g / out,))

    def exp(self):
        out = np.exp(self.data)
        return Tensor(out, parents=(self,), backward_fn=lambda g: (g * out,))

    def clamp_min(self, lo):
        mask = self.data > lo
        return Tensor(
            np.where(mask, self.data, lo),
            parents=(self,),
            backward_fn=lambda g: (g * mask,),
        )

    def leaky_relu(self, slope):
        pos = self.data >= 0
        return Tensor(
            np.where(pos, self.data, slope * self.data),
            parents=(self,),
            backward_fn=lambda g: (np.where(pos, g, slope * g),),
        )

    # ------------------------------------------------------------------
    # reductions and shape ops
    # ------------------------------------------------------------------
    def sum(self, axis=None, keepdims=False):
        shape = self.shape

        def bw(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape),)

        return Tensor(self.data.sum(axis=axis, keepdims=keepdims), parents=(self,), backward_fn=bw)

    def mean(self, axis=None, keepdims=False):
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def transpose(self):
        return Tensor(self.data.T, parents=(self,), backward_fn=lambda g: (g.T,))

    def __matmul__(self, other):
        other = as_tensor(other)
        x, y = self.data, other.data
        if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[0]:
            raise DimensionError(f"cannot multiply {x.shape} by {y.shape}")
        return Tensor(x @ y, parents=(self, other), backward_fn=lambda g: (g @ y.T, x.T @ g))

    def __getitem__(self, key):
        shape = self.shape

        def bw(g):
            full = np.zeros(shape)
            full[key] = g
            return (full,)

        return Tensor(self.data[key], parents=(self,), backward_fn=bw)

    def take_rows(self, index):
        """Gather rows by integer index (duplicates allowed)."""
        index = np.asarray(index)
        shape = self.shape

        def bw(g):
            full = np.zeros(shape)
            np.add.at(full, index, g)
            return (full,)

        return Tensor(self.data[index], parents=(self,), backward_fn=bw)


class Parameter(Tensor):
    """A trainable tensor carrying AdamW moment slots."""

    def __init__(self, data, name=None):
        super().__init__(np.array(data, dtype=np.float64, copy=True), requires_grad=True)
        self.name = name
        self.m = np.zeros_like(self.data)
        self.v = np.zeros_like(self.data)
        self.step = 0

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape})"


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def concat_cols(tensors):
    """Concatenate 2-D tensors along columns."""
    tensors = [as_tensor(t) for t in tensors]
    widths = np.cumsum([0] + [t.shape[1] for t in tensors])

    def bw(g):
        return tuple(g[:, widths[i] : widths[i + 1]] for i in range(len(tensors)))

    return Tensor(
        np.concatenate([t.data for t in tensors], axis=1),
        parents=tuple(tensors),
        backward_fn=bw,
    )


def segment_sum(x, segment_ids, num_segments):
    """Sum rows of ``x`` into ``num_segments`` buckets given by ``segment_ids``."""
    x = as_tensor(x)
    segment_ids = np.asarray(segment_ids)
    out = np.zeros((num_segments,) + x.shape[1:])
    np.add.at(out, segment_ids, x.data)
    return Tensor(out, parents=(x,), backward_fn=lambda g: (g[segment_ids],))


def spmm(matrix, x):
    """Sparse-constant times dense-tensor product ``matrix @ x``.

    ``matrix`` is anything exposing ``@`` with numpy arrays and ``.T``
    (a scipy sparse array, or a dense array in tests).
    """
    x = as_tensor(x)
    if matrix.shape[1] != x.shape[0]:
        raise DimensionError(f"cannot multiply {matrix.shape} by {x.shape}")
    mt = matrix.T
    return Tensor(
        np.asarray(matrix @ x.data),
        parents=(x,),
        backward_fn=lambda g: (np.asarray(mt @ g),),
    )


def standardize_columns(x, mean=None, var=None, min_std=1e-12):
    """Center and scale each column to unit population std.

    With ``mean``/``var`` omitted the batch statistics are used and the
    result is differentiable through them. Columns whose std falls below
    ``min_std`` map to zeros. Returns ``(out, batch_mean, batch_var)``;
    the batch stats are ``None`` when fixed statistics were supplied.
    """
    x = as_tensor(x)
    if mean is None:
        mu = x.mean(axis=0, keepdims=True)
        centered = x - mu
        v = (centered * centered).mean(axis=0, keepdims=True)
        alive = np.sqrt(v.data) >= min_std
        std = v.clamp_min(min_std**2).sqrt()
        out = centered / std * alive
        return out, mu.data.ravel(), v.data.ravel()
    mean = np.asarray(mean, dtype=np.float64).reshape(1, -1)
    var = np.asarray(var, dtype=np.float64).reshape(1, -1)
    std = np.sqrt(var)
    alive = std >= min_std
    out = (x - mean) * (alive / np.where(alive, std, 1.0))
    return out, None, None
