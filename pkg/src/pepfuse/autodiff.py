"""Dense numpy tensors with reverse-mode automatic differentiation.

Covers exactly the operation set the network and losses need: matmul,
valid-padding stride-1 1D convolution, elementwise arithmetic, sigmoid,
tanh, ReLU, softmax, exp/log/sqrt/clip, reductions, concatenation, and
slicing. Every forward op checks finiteness and raises on NaN/Inf.

Gradients follow the closure-per-node pattern: each result records its
parents and a ``_backward`` thunk; ``backward`` walks the graph in reverse
topological order. Leaf gradients accumulate across calls (+=); gradients
of interior nodes are reset at the start of each backward pass.
"""

from __future__ import annotations

import numpy as np

from .errors import NonFiniteError

DTYPE = np.float64


def _checked(data: np.ndarray, where: str) -> np.ndarray:
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(where)
    return data


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A dense array node on the autodiff graph."""

    __slots__ = ("data", "grad", "requires_grad", "_prev", "_backward", "_op")

    def __init__(self, data, requires_grad: bool = False,
                 _prev: tuple = (), _op: str = "leaf"):
        self.data = _checked(np.asarray(data, dtype=DTYPE), _op)
        self.requires_grad = requires_grad or any(
            p.requires_grad for p in _prev)
        self.grad = (np.zeros_like(self.data)
                     if self.requires_grad else None)
        self._prev = _prev
        self._backward = lambda: None
        self._op = _op

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> np.ndarray:
        return self.data.copy()

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self._op})"

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        other = _as_tensor(other)
        out = Tensor(self.data + other.data, _prev=(self, other), _op="add")

        def back():
            if self.requires_grad:
                self.grad += _unbroadcast(out.grad, self.data.shape)
            if other.requires_grad:
                other.grad += _unbroadcast(out.grad, other.data.shape)
        out._backward = back
        return out

    def __mul__(self, other):
        other = _as_tensor(other)
        out = Tensor(self.data * other.data, _prev=(self, other), _op="mul")

        def back():
            if self.requires_grad:
                self.grad += _unbroadcast(out.grad * other.data,
                                          self.data.shape)
            if other.requires_grad:
                other.grad += _unbroadcast(out.grad * self.data,
                                           other.data.shape)
        out._backward = back
        return out

    def __truediv__(self, other):
        other = _as_tensor(other)
        out = Tensor(self.data / other.data, _prev=(self, other), _op="div")

        def back():
            if self.requires_grad:
                self.grad += _unbroadcast(out.grad / other.data,
                                          self.data.shape)
            if other.requires_grad:
                other.grad += _unbroadcast(
                    -out.grad * self.data / other.data ** 2,
                    other.data.shape)
        out._backward = back
        return out

    def __pow__(self, exponent: float):
        if not isinstance(exponent, (int, float)):
            raise TypeError("only constant exponents are differentiable here")
        out = Tensor(self.data ** exponent, _prev=(self,), _op="pow")

        def back():
            if self.requires_grad:
                self.grad += out.grad * exponent * self.data ** (exponent - 1)
        out._backward = back
        return out

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-_as_tensor(other))

    def __radd__(self, other):
        return _as_tensor(other) + self

    def __rsub__(self, other):
        return _as_tensor(other) - self

    def __rmul__(self, other):
        return _as_tensor(other) * self

    def __rtruediv__(self, other):
        return _as_tensor(other) / self

    def __matmul__(self, other):
        other = _as_tensor(other)
        a, b = self.data, other.data
        out = Tensor(np.matmul(a, b), _prev=(self, other), _op="matmul")

        def back():
            g = out.grad
            if self.requires_grad:
                if a.ndim == 1 and b.ndim == 1:
                    self.grad += g * b
                elif b.ndim == 1:
                    self.grad += np.outer(g, b)
                else:
                    self.grad += g @ b.T
            if other.requires_grad:
                if a.ndim == 1 and b.ndim == 1:
                    other.grad += g * a
                elif a.ndim == 1:
                    other.grad += np.outer(a, g)
                else:
                    other.grad += a.T @ g
        out._backward = back
        return out

    def __getitem__(self, key):
        out = Tensor(self.data[key], _prev=(self,), _op="slice")

        def back():
            if self.requires_grad:
                np.add.at(self.grad, key, out.grad)
        out._backward = back
        return out

    # -- elementwise functions --------------------------------------------

    def exp(self):
        out = Tensor(np.exp(self.data), _prev=(self,), _op="exp")

        def back():
            if self.requires_grad:
                self.grad += out.grad * out.data
        out._backward = back
        return out

    def log(self):
        out = Tensor(np.log(self.data), _prev=(self,), _op="log")

        def back():
            if self.requires_grad:
                self.grad += out.grad / self.data
        out._backward = back
        return out

    def sqrt(self):
        out = Tensor(np.sqrt(self.data), _prev=(self,), _op="sqrt")

        def back():
            if self.requires_grad:
                self.grad += out.grad * 0.5 / out.data
        out._backward = back
        return out

    def sigmoid(self):
        x = self.data
        pos = x >= 0
        vals = np.empty_like(x)
        vals[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        vals[~pos] = ex / (1.0 + ex)
        out = Tensor(vals, _prev=(self,), _op="sigmoid")

        def back():
            if self.requires_grad:
                self.grad += out.grad * out.data * (1.0 - out.data)
        out._backward = back
        return out

    def tanh(self):
        out = Tensor(np.tanh(self.data), _prev=(self,), _op="tanh")

        def back():
            if self.requires_grad:
                self.grad += out.grad * (1.0 - out.data ** 2)
        out._backward = back
        return out

    def relu(self):
        out = Tensor(np.maximum(self.data, 0.0), _prev=(self,), _op="relu")

        def back():
            if self.requires_grad:
                self.grad += out.grad * (self.data > 0)
        out._backward = back
        return out

    def clip(self, lo: float, hi: float):
        """Clamp values; gradient passes only where data stayed in range."""
        out = Tensor(np.clip(self.data, lo, hi), _prev=(self,), _op="clip")

        def back():
            if self.requires_grad:
                inside = (self.data >= lo) & (self.data <= hi)
                self.grad += out.grad * inside
        out._backward = back
        return out

    # -- shape and reduction ops ------------------------------------------

    def reshape(self, *shape):
        out = Tensor(self.data.reshape(*shape), _prev=(self,), _op="reshape")

        def back():
            if self.requires_grad:
                self.grad += out.grad.reshape(self.data.shape)
        out._backward = back
        return out

    def sum(self, axis=None):
        out = Tensor(self.data.sum(axis=axis), _prev=(self,), _op="sum")

        def back():
            if self.requires_grad:
                g = out.grad
                if axis is not None:
                    g = np.expand_dims(g, axis)
                self.grad += np.broadcast_to(g, self.data.shape)
        out._backward = back
        return out

    def mean(self, axis=None):
        count = (self.data.size if axis is None else self.data.shape[axis])
        return self.sum(axis=axis) * (1.0 / count)

    def softmax(self, axis: int = -1):
        shifted = self.data - self.data.max(axis=axis, keepdims=True)
        ex = np.exp(shifted)
        vals = ex / ex.sum(axis=axis, keepdims=True)
        out = Tensor(vals, _prev=(self,), _op="softmax")

        def back():
            if self.requires_grad:
                inner = (out.grad * out.data).sum(axis=axis, keepdims=True)
                self.grad += out.data * (out.grad - inner)
        out._backward = back
        return out


def _as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def constant(data) -> Tensor:
    return Tensor(data)


def parameter(data) -> Tensor:
    return Tensor(data, requires_grad=True)


def concat(tensors: list[Tensor], axis: int = 0) -> Tensor:
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis),
                 _prev=tuple(tensors), _op="concat")
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def back():
        for i, t in enumerate(tensors):
            if not t.requires_grad:
                continue
            sl = [slice(None)] * out.grad.ndim
            sl[axis] = slice(offsets[i], offsets[i + 1])
            t.grad += out.grad[tuple(sl)]
    out._backward = back
    return out


def stack_scalars(tensors: list[Tensor]) -> Tensor:
    """Pack scalar tensors into a 1D tensor."""
    return concat([t.reshape(1) for t in tensors], axis=0)


def conv1d(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Valid-padding stride-1 convolution.

    x: (L, Cin); w: (K, H, Cin); b: (K,). Output (L-H+1, K); the caller
    applies the activation.
    """
    length, c_in = x.data.shape
    kernels, width, c_in_w = w.data.shape
    if c_in != c_in_w:
        raise ValueError(f"conv1d: channel mismatch {c_in} vs {c_in_w}")
    if length < width:
        raise ValueError(f"conv1d: length {length} shorter than kernel {width}")
    windows = np.lib.stride_tricks.sliding_window_view(
        x.data, width, axis=0)            # (L-H+1, Cin, H)
    windows = windows.transpose(0, 2, 1)  # (L-H+1, H, Cin)
    vals = np.einsum("jhc,khc->jk", windows, w.data) + b.data
    out = Tensor(vals, _prev=(x, w, b), _op="conv1d")

    def back():
        g = out.grad  # (L-H+1, K)
        if w.requires_grad:
            w.grad += np.einsum("jk,jhc->khc", g, windows)
        if b.requires_grad:
            b.grad += g.sum(axis=0)
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            for h in range(width):
                gx[h:h + g.shape[0]] += g @ w.data[:, h, :]
            x.grad += gx
    out._backward = back
    return out


def backward(loss: Tensor) -> None:
    """Reverse-mode sweep from a scalar loss.

    Interior-node gradients are reset first so repeated calls accumulate
    only into leaves.
    """
    if loss.data.shape != ():
        raise ValueError(f"backward needs a scalar, got shape {loss.shape}")
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._prev:
            if id(parent) not in seen and parent.requires_grad:
                stack.append((parent, False))
    for node in topo:
        if node._prev and node.requires_grad:
            node.grad = np.zeros_like(node.data)
    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        node._backward()


def zero_grad(params) -> None:
    """Reset leaf gradients; accepts an iterable or dict of tensors."""
    values = params.values() if isinstance(params, dict) else params
    for t in values:
        if t.grad is not None:
            t.grad = np.zeros_like(t.data)
