"""Reverse-mode autodiff over dense float64 numpy arrays.

Deliberately minimal: only the kernels the sleep models compose
(affine maps, 1-d convolution, normalization/softmax building blocks,
reductions, reshapes). Forward values are computed eagerly; each op
records a closure that accumulates analytic adjoints into its parents.
Everything runs in float64 so loop-oracle and finite-difference
tolerances are achievable.
"""

from __future__ import annotations

import threading
from typing import Sequence

import numpy as np
from scipy.special import erf as _erf

_state = threading.local()

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _grad_enabled() -> bool:
    return getattr(_state, "grad_enabled", True)


class no_grad:
    """Context manager: skip graph recording (inference fast path)."""

    def __enter__(self):
        self._prev = _grad_enabled()
        _state.grad_enabled = False
        return self

    def __exit__(self, *exc):
        _state.grad_enabled = self._prev
        return False


class Tensor:
    """A dense float64 array plus (optionally) a recorded backward closure."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def assert_finite(self, what: str = "tensor") -> "Tensor":
        if not np.all(np.isfinite(self.data)):
            raise FloatingPointError(f"non-finite values in {what}")
        return self

    def backward(self) -> None:
        """Accumulate gradients of this scalar into every reachable parent."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar loss")
        if not np.all(np.isfinite(self.data)):
            raise FloatingPointError("backward() on a non-finite loss")
        topo: list[Tensor] = []
        seen = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # Operator sugar; rhs may be a plain scalar/array.
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __rtruediv__(self, other):
        return div(_wrap(other), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, _wrap(other))

    def __pow__(self, exponent):
        return pow_const(self, exponent)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, grad={'set' if self.grad is not None else 'None'})"

    # Reductions / reshapes as methods for readability at call sites.
    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 or isinstance(shape[0], int) else shape[0])

    def transpose(self, *axes):
        return transpose(self, axes)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _acc(t: Tensor, g: np.ndarray) -> None:
    t.grad = g if t.grad is None else t.grad + g


def _node(data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    out = Tensor(data)
    if _grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(p for p in parents if p.requires_grad)
        out._backward = backward
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a broadcast gradient back to the original operand shape."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gd, sd) in enumerate(zip(g.shape, shape)) if sd == 1 and gd != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise arithmetic


def add(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        if a.requires_grad:
            _acc(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _acc(b, _unbroadcast(g, b.data.shape))

    return _node(a.data + b.data, (a, b), bw)


def sub(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        if a.requires_grad:
            _acc(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _acc(b, _unbroadcast(-g, b.data.shape))

    return _node(a.data - b.data, (a, b), bw)


def mul(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        if a.requires_grad:
            _acc(a, _unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            _acc(b, _unbroadcast(g * a.data, b.data.shape))

    return _node(a.data * b.data, (a, b), bw)


def div(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        if a.requires_grad:
            _acc(a, _unbroadcast(g / b.data, a.data.shape))
        if b.requires_grad:
            _acc(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return _node(a.data / b.data, (a, b), bw)


def neg(a: Tensor) -> Tensor:
    def bw(g):
        if a.requires_grad:
            _acc(a, -g)

    return _node(-a.data, (a,), bw)


def pow_const(a: Tensor, exponent: float) -> Tensor:
    p = float(exponent)
    y = a.data**p

    def bw(g):
        if a.requires_grad:
            _acc(a, g * p * a.data ** (p - 1.0))

    return _node(y, (a,), bw)


def exp(a: Tensor) -> Tensor:
    y = np.exp(a.data)

    def bw(g):
        if a.requires_grad:
            _acc(a, g * y)

    return _node(y, (a,), bw)


def log(a: Tensor) -> Tensor:
    def bw(g):
        if a.requires_grad:
            _acc(a, g / a.data)

    return _node(np.log(a.data), (a,), bw)


def sqrt(a: Tensor) -> Tensor:
    y = np.sqrt(a.data)

    def bw(g):
        if a.requires_grad:
            _acc(a, g * 0.5 / y)

    return _node(y, (a,), bw)


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)

    def bw(g):
        if a.requires_grad:
            _acc(a, g * (1.0 - y * y))

    return _node(y, (a,), bw)


def clip_floor(a: Tensor, lo: float) -> Tensor:
    """max(a, lo) with zero gradient where the floor is active."""
    mask = a.data > lo

    def bw(g):
        if a.requires_grad:
            _acc(a, g * mask)

    return _node(np.maximum(a.data, lo), (a,), bw)


# ---------------------------------------------------------------------------
# activations


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def bw(g):
        if a.requires_grad:
            _acc(a, g * mask)

    return _node(np.where(mask, a.data, 0.0), (a,), bw)


def sigmoid(a: Tensor) -> Tensor:
    y = 1.0 / (1.0 + np.exp(-np.abs(a.data)))
    y = np.where(a.data >= 0, y, 1.0 - y)

    def bw(g):
        if a.requires_grad:
            _acc(a, g * y * (1.0 - y))

    return _node(y, (a,), bw)


def silu(a: Tensor) -> Tensor:
    s = 1.0 / (1.0 + np.exp(-np.abs(a.data)))
    s = np.where(a.data >= 0, s, 1.0 - s)

    def bw(g):
        if a.requires_grad:
            _acc(a, g * s * (1.0 + a.data * (1.0 - s)))

    return _node(a.data * s, (a,), bw)


def gelu(a: Tensor) -> Tensor:
    # Exact erf form, not the tanh approximation.
    c = 0.5 * (1.0 + _erf(a.data * _INV_SQRT2))
    y = a.data * c

    def bw(g):
        if a.requires_grad:
            pdf = _INV_SQRT2PI * np.exp(-0.5 * a.data * a.data)
            _acc(a, g * (c + a.data * pdf))

    return _node(y, (a,), bw)


def softplus(a: Tensor) -> Tensor:
    y = np.maximum(a.data, 0.0) + np.log1p(np.exp(-np.abs(a.data)))

    def bw(g):
        if a.requires_grad:
            s = 1.0 / (1.0 + np.exp(-np.abs(a.data)))
            s = np.where(a.data >= 0, s, 1.0 - s)
            _acc(a, g * s)

    return _node(y, (a,), bw)


_ACTIVATIONS = {"relu": relu, "gelu": gelu, "silu": silu}


def activation(a: Tensor, kind: str) -> Tensor:
    """Elementwise nonlinearity; kind in {relu, gelu, silu}."""
    try:
        return _ACTIVATIONS[kind](a)
    except KeyError:
        raise ValueError(f"unknown activation kind: {kind!r}") from None


# ---------------------------------------------------------------------------
# reductions


def _axis_tuple(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        return (axis % ndim,)
    return tuple(a % ndim for a in axis)


def sum_(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _axis_tuple(axis, a.data.ndim)
    y = a.data.sum(axis=axes, keepdims=keepdims)

    def bw(g):
        if a.requires_grad:
            gg = g
            if not keepdims:
                gg = np.expand_dims(gg, axes)
            _acc(a, np.broadcast_to(gg, a.data.shape).copy())

    return _node(y, (a,), bw)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _axis_tuple(axis, a.data.ndim)
    n = int(np.prod([a.data.shape[i] for i in axes]))
    y = a.data.mean(axis=axes, keepdims=keepdims)

    def bw(g):
        if a.requires_grad:
            gg = g
            if not keepdims:
                gg = np.expand_dims(gg, axes)
            _acc(a, np.broadcast_to(gg / n, a.data.shape).copy())

    return _node(y, (a,), bw)


# ---------------------------------------------------------------------------
# shape ops


def reshape(a: Tensor, shape) -> Tensor:
    def bw(g):
        if a.requires_grad:
            _acc(a, g.reshape(a.data.shape))

    return _node(a.data.reshape(shape), (a,), bw)


def transpose(a: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))

    def bw(g):
        if a.requires_grad:
            _acc(a, g.transpose(inv))

    return _node(a.data.transpose(axes), (a,), bw)


def swap_last2(a: Tensor) -> Tensor:
    def bw(g):
        if a.requires_grad:
            _acc(a, g.swapaxes(-1, -2))

    return _node(a.data.swapaxes(-1, -2), (a,), bw)


def getitem(a: Tensor, idx) -> Tensor:
    def bw(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            full[idx] = g
            _acc(a, full)

    return _node(a.data[idx], (a,), bw)


def take_rows(a: Tensor, rows: np.ndarray) -> Tensor:
    """Gather a[rows[i], i-th row] for integer index array over axis 0."""
    rows = np.asarray(rows)

    def bw(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            np.add.at(full, rows, g)
            _acc(a, full)

    return _node(a.data[rows], (a,), bw)


def gather_probs(p: Tensor, targets: np.ndarray) -> Tensor:
    """p[i, targets[i]] for a 2-d probability matrix."""
    targets = np.asarray(targets, dtype=np.intp)
    n = p.data.shape[0]
    ar = np.arange(n)

    def bw(g):
        if p.requires_grad:
            full = np.zeros_like(p.data)
            full[ar, targets] = g
            _acc(p, full)

    return _node(p.data[ar, targets], (p,), bw)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = list(tensors)
    axis = axis % tensors[0].data.ndim
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bw(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                _acc(t, g[tuple(sl)])

    return _node(np.concatenate([t.data for t in tensors], axis=axis), tensors, bw)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = list(tensors)

    def bw(g):
        for i, t in enumerate(tensors):
            if t.requires_grad:
                _acc(t, np.take(g, i, axis=axis))

    return _node(np.stack([t.data for t in tensors], axis=axis), tensors, bw)


def flip(a: Tensor, axis: int) -> Tensor:
    def bw(g):
        if a.requires_grad:
            _acc(a, np.flip(g, axis=axis))

    return _node(np.flip(a.data, axis=axis), (a,), bw)


# ---------------------------------------------------------------------------
# linear algebra kernels


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ValueError("matmul requires >=2-d operands; use linear() for vectors")
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ValueError(f"matmul inner dims differ: {a.data.shape} @ {b.data.shape}")

    def bw(g):
        if a.requires_grad:
            _acc(a, _unbroadcast(g @ b.data.swapaxes(-1, -2), a.data.shape))
        if b.requires_grad:
            _acc(b, _unbroadcast(a.data.swapaxes(-1, -2) @ g, b.data.shape))

    return _node(a.data @ b.data, (a, b), bw)


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """y = x @ w + b with x of shape (..., in) and w of shape (in, out)."""
    if x.data.shape[-1] != w.data.shape[0]:
        raise ValueError(
            f"linear: input dim {x.data.shape[-1]} != weight fan-in {w.data.shape[0]}"
        )
    vec = x.data.ndim == 1
    xm = reshape(x, (1, -1)) if vec else x
    y = matmul(xm, w)
    if b is not None:
        y = add(y, b)
    return reshape(y, (-1,)) if vec else y


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Rows on the simplex; max-subtraction keeps magnitude-1e3 inputs exact."""
    m = x.data.max(axis=axis, keepdims=True)
    e = np.exp(x.data - m)
    y = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        if x.requires_grad:
            dot = (g * y).sum(axis=axis, keepdims=True)
            _acc(x, y * (g - dot))

    return _node(y, (x,), bw)


# ---------------------------------------------------------------------------
# convolution / pooling


def conv1d(
    x: Tensor,
    w: Tensor,
    b: Tensor | None = None,
    stride: int = 1,
    padding: int = 0,
    dilation: int = 1,
) -> Tensor:
    """Cross-correlation over the last axis.

    x: (B, C_in, L), w: (C_out, C_in, K).  L' = floor((L + 2p - K_eff)/s) + 1
    with K_eff = (K-1)*dilation + 1.
    """
    if x.data.ndim != 3 or w.data.ndim != 3:
        raise ValueError("conv1d expects x (B,C,L) and w (C_out,C_in,K)")
    bsz, c_in, length = x.data.shape
    c_out, c_in_w, k = w.data.shape
    if c_in != c_in_w:
        raise ValueError(f"conv1d channel mismatch: x has {c_in}, w has {c_in_w}")
    if stride < 1:
        raise ValueError("conv1d stride must be >= 1")
    k_eff = (k - 1) * dilation + 1
    l_out = (length + 2 * padding - k_eff) // stride + 1
    if l_out < 1:
        raise ValueError(
            f"conv1d empty output: L={length}, K={k}, stride={stride}, padding={padding}"
        )

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding))) if padding else x.data
    win = np.lib.stride_tricks.sliding_window_view(xp, k_eff, axis=2)
    cols = win[:, :, ::stride, :][:, :, :l_out, ::dilation]  # (B, C_in, L', K)
    cols2 = np.ascontiguousarray(cols.transpose(0, 2, 1, 3)).reshape(bsz, l_out, c_in * k)
    w2 = w.data.reshape(c_out, c_in * k)
    out = cols2 @ w2.T  # (B, L', C_out)
    if b is not None:
        out = out + b.data
    out = out.transpose(0, 2, 1)

    def bw(g):
        gt = np.ascontiguousarray(g.transpose(0, 2, 1))  # (B, L', C_out)
        if b is not None and b.requires_grad:
            _acc(b, gt.sum(axis=(0, 1)))
        if w.requires_grad:
            gw = gt.reshape(-1, c_out).T @ cols2.reshape(-1, c_in * k)
            _acc(w, gw.reshape(c_out, c_in, k))
        if x.requires_grad:
            gcols = (gt @ w2).reshape(bsz, l_out, c_in, k).transpose(0, 2, 1, 3)
            gxp = np.zeros_like(xp)
            for j in range(k):
                off = j * dilation
                gxp[:, :, off : off + l_out * stride : stride] += gcols[:, :, :, j]
            _acc(x, gxp[:, :, padding : padding + length] if padding else gxp)

    parents = (x, w) if b is None else (x, w, b)
    return _node(out, parents, bw)


def depthwise_conv1d(x: Tensor, w: Tensor, b: Tensor | None = None, padding: int = 0) -> Tensor:
    """Per-channel convolution: x (B,C,L), w (C,K); stride 1."""
    bsz, c, length = x.data.shape
    c_w, k = w.data.shape
    if c != c_w:
        raise ValueError(f"depthwise_conv1d channel mismatch: {c} vs {c_w}")
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding))) if padding else x.data
    l_out = xp.shape[2] - k + 1
    win = np.lib.stride_tricks.sliding_window_view(xp, k, axis=2)  # (B,C,L',K)
    out = np.einsum("bclk,ck->bcl", win, w.data)
    if b is not None:
        out = out + b.data[None, :, None]

    def bw(g):
        if b is not None and b.requires_grad:
            _acc(b, g.sum(axis=(0, 2)))
        if w.requires_grad:
            _acc(w, np.einsum("bclk,bcl->ck", win, g))
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            for j in range(k):
                gxp[:, :, j : j + l_out] += g * w.data[None, :, j : j + 1]
            _acc(x, gxp[:, :, padding : padding + length] if padding else gxp)

    parents = (x, w) if b is None else (x, w, b)
    return _node(out, parents, bw)


def maxpool1d(x: Tensor, kernel: int) -> Tensor:
    """Non-overlapping max pooling (stride == kernel); trailing remainder dropped."""
    bsz, c, length = x.data.shape
    l_out = length // kernel
    if l_out < 1:
        raise ValueError(f"maxpool1d: length {length} shorter than kernel {kernel}")
    blocks = x.data[:, :, : l_out * kernel].reshape(bsz, c, l_out, kernel)
    idx = blocks.argmax(axis=3)
    out = np.take_along_axis(blocks, idx[..., None], axis=3)[..., 0]

    def bw(g):
        if x.requires_grad:
            gb = np.zeros_like(blocks)
            np.put_along_axis(gb, idx[..., None], g[..., None], axis=3)
            full = np.zeros_like(x.data)
            full[:, :, : l_out * kernel] = gb.reshape(bsz, c, l_out * kernel)
            _acc(x, full)

    return _node(out, (x,), bw)


def dropout(x: Tensor, rate: float, rng) -> Tensor:
    """Inverted dropout; rate 0 (the default everywhere) is the identity."""
    if rate <= 0.0:
        return x
    if rate >= 1.0:
        raise ValueError("dropout rate must be < 1")
    mask = (rng.uniform(0.0, 1.0, x.data.shape) >= rate) / (1.0 - rate)

    def bw(g):
        if x.requires_grad:
            _acc(x, g * mask)

    return _node(x.data * mask, (x,), bw)
