# src/Core/Tools/Tensor/functional.py
# Forward ops with their backward passes. Each op is a Function subclass plus a
# thin public wrapper that validates shapes before anything is computed.

from __future__ import annotations

from typing import Literal, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.Core.Models.errors import DimensionError, NumericError, UsageError
from src.Core.Tools.Tensor.tensor import Function, Tensor

# --- broadcasting -----------------------------------------------------------
# Only two patterns are accepted: one operand is a scalar (a single element), or
# both have the same rank and the smaller one has extent 1 on the broadcast axes
# (per-channel [n,c,1,1], per-pixel [n,1,h,w], bias rows [1,c]).


def _broadcast_shape(a: tuple[int, ...], b: tuple[int, ...], op: str) -> tuple[int, ...]:
    if a == b:
        return a
    for big, small in ((a, b), (b, a)):
        if int(np.prod(small)) == 1 and len(small) <= len(big):
            return big
        if len(small) == len(big) and all(s in (1, g) for s, g in zip(small, big)):
            return big
    raise DimensionError(f"{op}: shapes {a} and {b} are not scalar or singleton-axis compatible")


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    if int(np.prod(shape)) == 1:
        return np.asarray(grad.sum()).reshape(shape)
    axes = tuple(i for i, (s, g) in enumerate(zip(shape, grad.shape)) if s == 1 and g != 1)
    return grad.sum(axis=axes, keepdims=True)


# --- elementwise ------------------------------------------------------------


class Add(Function):
    def forward(self, a, b):
        return a + b

    def backward(self, grad):
        a, b = self.tensors
        return _unbroadcast(grad, a.shape), _unbroadcast(grad, b.shape)


class Sub(Function):
    def forward(self, a, b):
        return a - b

    def backward(self, grad):
        a, b = self.tensors
        return _unbroadcast(grad, a.shape), _unbroadcast(-grad, b.shape)


class Mul(Function):
    def forward(self, a, b):
        return a * b

    def backward(self, grad):
        a, b = self.tensors
        return _unbroadcast(grad * b.data, a.shape), _unbroadcast(grad * a.data, b.shape)


class Neg(Function):
    def forward(self, a):
        return -a

    def backward(self, grad):
        return (-grad,)


class Sigmoid(Function):
    def forward(self, a):
        # exp of a non-positive argument only, so it never overflows
        z = np.exp(-np.abs(a))
        self.out = np.where(a >= 0, 1.0 / (1.0 + z), z / (1.0 + z))
        return self.out

    def backward(self, grad):
        return (grad * self.out * (1.0 - self.out),)


class Relu(Function):
    def forward(self, a):
        self.mask = a > 0
        return np.where(self.mask, a, 0.0)

    def backward(self, grad):
        # relu'(0) = 0
        return (grad * self.mask,)


class Log(Function):
    def forward(self, a):
        if (a <= 0).any():
            raise NumericError("log of a non-positive value")
        return np.log(a)

    def backward(self, grad):
        return (grad / self.tensors[0].data,)


class Square(Function):
    def forward(self, a):
        return a * a

    def backward(self, grad):
        return (2.0 * grad * self.tensors[0].data,)


class Clamp(Function):
    def forward(self, a, *, lo, hi):
        self.mask = (a >= lo) & (a <= hi)
        return np.clip(a, lo, hi)

    def backward(self, grad):
        return (grad * self.mask,)


ElementwiseKind = Literal["add", "sub", "mul", "sigmoid", "relu", "log", "square", "neg"]
_BINARY = {"add": Add, "sub": Sub, "mul": Mul}
_UNARY = {"sigmoid": Sigmoid, "relu": Relu, "log": Log, "square": Square, "neg": Neg}


def elementwise(kind: ElementwiseKind, a: Tensor, b: Tensor | None = None) -> Tensor:
    """Pointwise op. Binary kinds accept scalar or singleton-axis broadcasting only."""
    if kind in _BINARY:
        if b is None:
            raise UsageError(f"elementwise '{kind}' needs two operands")
        _broadcast_shape(a.shape, b.shape, kind)
        return _BINARY[kind].apply(a, b)
    if kind in _UNARY:
        if b is not None:
            raise UsageError(f"elementwise '{kind}' takes one operand")
        return _UNARY[kind].apply(a)
    raise UsageError(f"unknown elementwise kind '{kind}'")


def add(a: Tensor, b: Tensor) -> Tensor:
    return elementwise("add", a, b)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return elementwise("sub", a, b)


def mul(a: Tensor, b: Tensor) -> Tensor:
    return elementwise("mul", a, b)


def neg(a: Tensor) -> Tensor:
    return elementwise("neg", a)


def sigmoid(a: Tensor) -> Tensor:
    return elementwise("sigmoid", a)


def relu(a: Tensor) -> Tensor:
    return elementwise("relu", a)


def log(a: Tensor) -> Tensor:
    return elementwise("log", a)


def square(a: Tensor) -> Tensor:
    return elementwise("square", a)


def clamp(a: Tensor, lo: float, hi: float) -> Tensor:
    return Clamp.apply(a, lo=lo, hi=hi)


# --- matmul / softmax -------------------------------------------------------


class MatMul(Function):
    def forward(self, a, b):
        return np.matmul(a, b)

    def backward(self, grad):
        a, b = self.tensors
        return np.matmul(grad, np.swapaxes(b.data, -1, -2)), np.matmul(np.swapaxes(a.data, -1, -2), grad)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """[..., m, k] @ [..., k, n] with identical leading (batch) extents."""
    if a.ndim < 2 or a.ndim != b.ndim:
        raise DimensionError(f"matmul needs equal-rank operands of rank >= 2, got {a.shape} and {b.shape}")
    if a.shape[:-2] != b.shape[:-2]:
        raise DimensionError(f"matmul batch extents differ: {a.shape} vs {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner extents differ: {a.shape} vs {b.shape}")
    return MatMul.apply(a, b)


class SoftmaxRows(Function):
    def forward(self, a):
        shifted = a - a.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        self.out = e / e.sum(axis=-1, keepdims=True)
        return self.out

    def backward(self, grad):
        y = self.out
        return (y * (grad - (grad * y).sum(axis=-1, keepdims=True)),)


def softmax_rows(t: Tensor) -> Tensor:
    """Softmax over the last axis, computed with per-row max subtraction."""
    if t.ndim == 0 or t.shape[-1] < 1:
        raise DimensionError(f"softmax_rows needs a last extent >= 1, got {t.shape}")
    return SoftmaxRows.apply(t)


# --- convolution ------------------------------------------------------------


def _pair(value: int | Sequence[int]) -> tuple[int, int]:
    if isinstance(value, int):
        return value, value
    ph, pw = value
    return int(ph), int(pw)


class Conv2d(Function):
    def forward(self, x, w, b, *, padding):
        ph, pw = padding
        self.padding = padding
        xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
        kh, kw = w.shape[2:]
        self.windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))  # [n, c, h', w', kh, kw]
        out = np.tensordot(self.windows, w, axes=([1, 4, 5], [1, 2, 3]))  # [n, h', w', o]
        return out.transpose(0, 3, 1, 2) + b.reshape(1, -1, 1, 1)

    def backward(self, grad):
        x, w, _ = self.tensors
        ph, pw = self.padding
        kh, kw = w.shape[2:]
        grad_w = np.tensordot(grad, self.windows, axes=([0, 2, 3], [0, 2, 3]))  # [o, c, kh, kw]
        grad_b = grad.sum(axis=(0, 2, 3))
        gp = np.pad(grad, ((0, 0), (0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1)))
        gwin = sliding_window_view(gp, (kh, kw), axis=(2, 3))  # [n, o, H+2ph, W+2pw, kh, kw]
        flipped = w.data[:, :, ::-1, ::-1]
        grad_xp = np.tensordot(gwin, flipped, axes=([1, 4, 5], [0, 2, 3])).transpose(0, 3, 1, 2)
        h, wd = x.shape[2:]
        grad_x = grad_xp[:, :, ph : ph + h, pw : pw + wd]
        return np.ascontiguousarray(grad_x), grad_w, grad_b


def conv2d(x: Tensor, weight: Tensor, bias: Tensor, padding: int | Sequence[int] = 0) -> Tensor:
    """Stride-1 cross-correlation. x [n,c_in,h,w], weight [c_out,c_in,kh,kw], bias [c_out]."""
    if x.ndim != 4 or weight.ndim != 4:
        raise DimensionError(f"conv2d needs 4-d input and weight, got {x.shape} and {weight.shape}")
    if x.shape[1] != weight.shape[1]:
        raise DimensionError(f"conv2d channel mismatch: input has {x.shape[1]}, weight expects {weight.shape[1]}")
    if bias.shape != (weight.shape[0],):
        raise DimensionError(f"conv2d bias must be ({weight.shape[0]},), got {bias.shape}")
    ph, pw = _pair(padding)
    kh, kw = weight.shape[2:]
    if x.shape[2] + 2 * ph < kh or x.shape[3] + 2 * pw < kw:
        raise DimensionError(f"conv2d kernel {kh}x{kw} does not fit padded input {x.shape[2:]} (pad {ph},{pw})")
    return Conv2d.apply(x, weight, bias, padding=(ph, pw))


# --- pooling ----------------------------------------------------------------

PoolKind = Literal["avg", "max"]


class GlobalPool(Function):
    def forward(self, x, *, kind):
        self.kind = kind
        n, c, h, w = x.shape
        flat = x.reshape(n, c, h * w)
        if kind == "avg":
            return flat.mean(axis=2)
        self.argmax = flat.argmax(axis=2)  # first flat index on ties
        return np.take_along_axis(flat, self.argmax[..., None], axis=2)[..., 0]

    def backward(self, grad):
        (x,) = self.tensors
        n, c, h, w = x.shape
        if self.kind == "avg":
            return (np.broadcast_to(grad[..., None, None] / (h * w), x.shape).copy(),)
        out = np.zeros((n, c, h * w), dtype=grad.dtype)
        np.put_along_axis(out, self.argmax[..., None], grad[..., None], axis=2)
        return (out.reshape(x.shape),)


def global_pool(kind: PoolKind, t: Tensor) -> Tensor:
    """Per-channel spatial reduction [n,c,h,w] -> [n,c]."""
    if t.ndim != 4 or t.shape[2] * t.shape[3] < 1:
        raise DimensionError(f"global_pool needs [n,c,h,w] with h*w >= 1, got {t.shape}")
    if kind not in ("avg", "max"):
        raise UsageError(f"unknown pool kind '{kind}'")
    return GlobalPool.apply(t, kind=kind)


class ChannelPool(Function):
    def forward(self, x, *, kind):
        self.kind = kind
        if kind == "avg":
            return x.mean(axis=1, keepdims=True)
        self.argmax = x.argmax(axis=1)[:, None]
        return np.take_along_axis(x, self.argmax, axis=1)

    def backward(self, grad):
        (x,) = self.tensors
        if self.kind == "avg":
            return (np.broadcast_to(grad / x.shape[1], x.shape).copy(),)
        out = np.zeros(x.shape, dtype=grad.dtype)
        np.put_along_axis(out, self.argmax, grad, axis=1)
        return (out,)


def channel_pool(kind: PoolKind, t: Tensor) -> Tensor:
    """Reduction across channels [n,c,h,w] -> [n,1,h,w]; max ties go to the first channel."""
    if t.ndim != 4 or t.shape[1] < 1:
        raise DimensionError(f"channel_pool needs [n,c,h,w] with c >= 1, got {t.shape}")
    if kind not in ("avg", "max"):
        raise UsageError(f"unknown pool kind '{kind}'")
    return ChannelPool.apply(t, kind=kind)


# --- layout -----------------------------------------------------------------


class Concat(Function):
    def forward(self, *parts, axis):
        self.axis = axis
        self.sizes = [p.shape[axis] for p in parts]
        return np.concatenate(parts, axis=axis)

    def backward(self, grad):
        bounds = np.cumsum(self.sizes)[:-1]
        return tuple(np.split(grad, bounds, axis=self.axis))


def concat_channels(parts: Sequence[Tensor]) -> Tensor:
    """Concatenate [n,c_i,h,w] tensors along the channel axis in argument order."""
    if not parts:
        raise UsageError("concat_channels needs at least one part")
    first = parts[0]
    for p in parts:
        if p.ndim != 4 or p.shape[0] != first.shape[0] or p.shape[2:] != first.shape[2:]:
            raise DimensionError(f"concat_channels: {p.shape} does not match {first.shape} on n, h, w")
    if len(parts) == 1:
        return parts[0]
    return Concat.apply(*parts, axis=1)


class Slice(Function):
    def forward(self, x, *, axis, start, stop):
        self.axis, self.start, self.stop = axis, start, stop
        index = [slice(None)] * x.ndim
        index[axis] = slice(start, stop)
        return x[tuple(index)].copy()

    def backward(self, grad):
        (x,) = self.tensors
        out = np.zeros(x.shape, dtype=grad.dtype)
        index = [slice(None)] * x.ndim
        index[self.axis] = slice(self.start, self.stop)
        out[tuple(index)] = grad
        return (out,)


def split_channels(t: Tensor, sizes: Sequence[int]) -> list[Tensor]:
    """Inverse of concat_channels."""
    if t.ndim != 4 or sum(sizes) != t.shape[1]:
        raise DimensionError(f"split_channels: sizes {list(sizes)} do not sum to channels of {t.shape}")
    parts, start = [], 0
    for size in sizes:
        parts.append(Slice.apply(t, axis=1, start=start, stop=start + size))
        start += size
    return parts


class Reshape(Function):
    def forward(self, x, *, shape):
        return x.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.tensors[0].shape),)


def reshape(t: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(int(s) for s in shape)
    if int(np.prod(shape)) != t.size or any(s < 0 for s in shape):
        raise DimensionError(f"cannot reshape {t.shape} ({t.size} elements) into {shape}")
    return Reshape.apply(t, shape=shape)


class Permute(Function):
    def forward(self, x, *, axes):
        self.axes = axes
        return np.ascontiguousarray(x.transpose(axes))

    def backward(self, grad):
        return (np.ascontiguousarray(grad.transpose(np.argsort(self.axes))),)


def permute(t: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(int(a) for a in axes)
    if sorted(axes) != list(range(t.ndim)):
        raise DimensionError(f"{axes} is not a permutation of the {t.ndim} axes of {t.shape}")
    return Permute.apply(t, axes=axes)


def permute_reshape(t: Tensor, new_axes_or_shape: Sequence[int], *, mode: Literal["permute", "reshape"]) -> Tensor:
    """Single entry point for the two layout transforms."""
    if mode == "permute":
        return permute(t, new_axes_or_shape)
    return reshape(t, new_axes_or_shape)


class Expand(Function):
    def forward(self, x, *, shape):
        return np.broadcast_to(x, shape).copy()

    def backward(self, grad):
        return (_unbroadcast(grad, self.tensors[0].shape),)


def expand(t: Tensor, shape: Sequence[int]) -> Tensor:
    """Repeat singleton axes up to ``shape`` (same rank)."""
    shape = tuple(int(s) for s in shape)
    if len(shape) != t.ndim or any(s != 1 and s != g for s, g in zip(t.shape, shape)):
        raise DimensionError(f"cannot expand {t.shape} to {shape}")
    return Expand.apply(t, shape=shape)


def space_to_depth(t: Tensor, factor: int) -> Tensor:
    """[n,c,h,w] -> [n, c*f*f, h/f, w/f]; each output channel keeps one phase of the grid."""
    n, c, h, w = t.shape
    if h % factor or w % factor:
        raise DimensionError(f"space_to_depth: {h}x{w} is not divisible by {factor}")
    blocks = reshape(t, (n, c, h // factor, factor, w // factor, factor))
    moved = permute(blocks, (0, 1, 3, 5, 2, 4))
    return reshape(moved, (n, c * factor * factor, h // factor, w // factor))


# --- reductions / helpers ---------------------------------------------------


class SumAll(Function):
    def forward(self, x):
        return np.asarray(x.sum())

    def backward(self, grad):
        return (np.broadcast_to(grad, self.tensors[0].shape).copy(),)


def sum_all(t: Tensor) -> Tensor:
    return SumAll.apply(t)


def mean_all(t: Tensor) -> Tensor:
    if t.size == 0:
        raise DimensionError("mean of an empty tensor")
    return mul(sum_all(t), Tensor(1.0 / t.size, dtype=t.dtype))


def linear(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """x [n,i] @ weight [i,o] + bias [o]."""
    if bias.shape != (weight.shape[1],):
        raise DimensionError(f"linear bias must be ({weight.shape[1]},), got {bias.shape}")
    return add(matmul(x, weight), reshape(bias, (1, weight.shape[1])))
