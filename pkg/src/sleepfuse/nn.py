"""Parameter containers and the standard blocks the encoders are built from."""

from __future__ import annotations

from typing import Iterator

import numpy as np

from . import tensor as T
from .rng import SeededRng
from .tensor import Tensor


class Parameter(Tensor):
    """Trainable tensor; grad must be zeroed before each backward pass."""

    __slots__ = ("name",)

    def __init__(self, data, name: str = ""):
        super().__init__(data, requires_grad=True)
        self.name = name


def uniform_init(rng: SeededRng, shape, fan_in: int) -> np.ndarray:
    bound = np.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, shape)


class Module:
    """Minimal parameter tree: attributes that are Parameters/Modules/lists."""

    def modules(self) -> Iterator["Module"]:
        yield self
        for value in self.__dict__.values():
            if isinstance(value, Module):
                yield from value.modules()
            elif isinstance(value, (list, tuple)):
                for item in value:
                    if isinstance(item, Module):
                        yield from item.modules()

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for key, value in self.__dict__.items():
            name = f"{prefix}{key}"
            if isinstance(value, Parameter):
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{name}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Parameter):
                        yield f"{name}.{i}", item
                    elif isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        if set(own) != set(state):
            missing = sorted(set(own) - set(state))
            extra = sorted(set(state) - set(own))
            raise KeyError(f"state dict mismatch; missing={missing}, unexpected={extra}")
        for name, p in own.items():
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != p.data.shape:
                raise ValueError(f"shape mismatch for {name}: {arr.shape} vs {p.data.shape}")
            p.data = arr.copy()


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: SeededRng, bias: bool = True):
        self.w = Parameter(uniform_init(rng, (d_in, d_out), d_in), "w")
        self.b = Parameter(np.zeros(d_out), "b") if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        return T.linear(x, self.w, self.b)


class Conv1d(Module):
    def __init__(
        self,
        c_in: int,
        c_out: int,
        kernel: int,
        rng: SeededRng,
        stride: int = 1,
        padding: int = 0,
        dilation: int = 1,
        bias: bool = True,
    ):
        self.stride = stride
        self.padding = padding
        self.dilation = dilation
        self.w = Parameter(uniform_init(rng, (c_out, c_in, kernel), c_in * kernel), "w")
        self.b = Parameter(np.zeros(c_out), "b") if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        y = T.conv1d(x, self.w, None, self.stride, self.padding, self.dilation)
        if self.b is not None:
            y = T.add(y, T.reshape(self.b, (1, -1, 1)))
        return y


class LayerNorm(Module):
    """(x - mean) / sqrt(var + eps) * gamma + beta over the last axis."""

    def __init__(self, d: int, eps: float = 1e-5):
        if d < 1:
            raise ValueError("layer_norm needs d >= 1")
        if eps <= 0:
            raise ValueError("layer_norm eps must be > 0")
        self.eps = eps
        self.gamma = Parameter(np.ones(d), "gamma")
        self.beta = Parameter(np.zeros(d), "beta")

    def __call__(self, x: Tensor) -> Tensor:
        mu = T.mean(x, axis=-1, keepdims=True)
        xc = T.sub(x, mu)
        var = T.mean(T.mul(xc, xc), axis=-1, keepdims=True)
        norm = T.div(xc, T.sqrt(T.add(var, Tensor(self.eps))))
        return T.add(T.mul(norm, self.gamma), self.beta)


class ChannelNorm(Module):
    """LayerNorm across the channel axis of a (B, C, L) map."""

    def __init__(self, c: int, eps: float = 1e-5):
        self.eps = eps
        self.gamma = Parameter(np.ones(c), "gamma")
        self.beta = Parameter(np.zeros(c), "beta")

    def __call__(self, x: Tensor) -> Tensor:
        mu = T.mean(x, axis=1, keepdims=True)
        xc = T.sub(x, mu)
        var = T.mean(T.mul(xc, xc), axis=1, keepdims=True)
        norm = T.div(xc, T.sqrt(T.add(var, Tensor(self.eps))))
        g = T.reshape(self.gamma, (1, -1, 1))
        b = T.reshape(self.beta, (1, -1, 1))
        return T.add(T.mul(norm, g), b)


class Identity(Module):
    def __call__(self, x: Tensor) -> Tensor:
        return x


class MultiHeadAttention(Module):
    """Scaled dot-product attention; heads concatenated then output-projected."""

    def __init__(self, d: int, heads: int, rng: SeededRng):
        if d % heads != 0:
            raise ValueError(f"model dim {d} not divisible by {heads} heads")
        self.d = d
        self.heads = heads
        self.wq = Linear(d, d, rng.derive(0))
        self.wk = Linear(d, d, rng.derive(1))
        self.wv = Linear(d, d, rng.derive(2))
        self.wo = Linear(d, d, rng.derive(3))

    def __call__(self, q: Tensor, k: Tensor, v: Tensor) -> Tensor:
        # q: (B, T_q, d); k, v: (B, T_k, d)
        bsz, t_q, _ = q.shape
        t_k = k.shape[1]
        h, dh = self.heads, self.d // self.heads
        qh = T.transpose(T.reshape(self.wq(q), (bsz, t_q, h, dh)), (0, 2, 1, 3))
        kh = T.transpose(T.reshape(self.wk(k), (bsz, t_k, h, dh)), (0, 2, 1, 3))
        vh = T.transpose(T.reshape(self.wv(v), (bsz, t_k, h, dh)), (0, 2, 1, 3))
        scores = T.mul(T.matmul(qh, T.swap_last2(kh)), Tensor(1.0 / np.sqrt(dh)))
        attn = T.softmax(scores, axis=-1)
        ctx = T.matmul(attn, vh)  # (B, h, T_q, dh)
        ctx = T.reshape(T.transpose(ctx, (0, 2, 1, 3)), (bsz, t_q, self.d))
        return self.wo(ctx)


class FeedForward(Module):
    def __init__(self, d: int, hidden: int, rng: SeededRng, act: str = "gelu"):
        self.act = act
        self.w1 = Linear(d, hidden, rng.derive(0))
        self.w2 = Linear(hidden, d, rng.derive(1))

    def __call__(self, x: Tensor) -> Tensor:
        return self.w2(T.activation(self.w1(x), self.act))


class TransformerBlock(Module):
    """Pre-norm self-attention block: x + Attn(LN(x)), then x + FFN(LN(x))."""

    def __init__(self, d: int, heads: int, hidden: int, rng: SeededRng, act: str = "gelu"):
        self.norm1 = LayerNorm(d)
        self.attn = MultiHeadAttention(d, heads, rng.derive(0))
        self.norm2 = LayerNorm(d)
        self.ffn = FeedForward(d, hidden, rng.derive(1), act)

    def __call__(self, x: Tensor) -> Tensor:
        h = self.norm1(x)
        x = T.add(x, self.attn(h, h, h))
        return T.add(x, self.ffn(self.norm2(x)))


class CrossAttentionBlock(Module):
    """Pre-norm cross-attention block: q attends to kv, then an FFN; residuals."""

    def __init__(self, d: int, heads: int, hidden: int, rng: SeededRng, act: str = "gelu"):
        self.norm_q = LayerNorm(d)
        self.norm_kv = LayerNorm(d)
        self.attn = MultiHeadAttention(d, heads, rng.derive(0))
        self.norm2 = LayerNorm(d)
        self.ffn = FeedForward(d, hidden, rng.derive(1), act)

    def __call__(self, q_seq: Tensor, kv_seq: Tensor) -> Tensor:
        kv = self.norm_kv(kv_seq)
        x = T.add(q_seq, self.attn(self.norm_q(q_seq), kv, kv))
        return T.add(x, self.ffn(self.norm2(x)))
