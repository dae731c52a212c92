"""
Differentiable primitives.

Every function takes Tensors (plain numbers are promoted to constants), runs the
forward pass in numpy and records a backward rule on the active tape. Image
tensors are NCHW; convolution kernels are (out, in, k, k) for conv2d and
(in, out, k, k) for deconv2d, so the same array is adjoint under both.
"""

from dataclasses import dataclass
from typing import Literal, Optional, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit, log_softmax, softmax

from t2f.engine.precision import get_dtype
from t2f.engine.tensor import Tensor, apply_op, as_tensor
from t2f.errors import DegenerateBatchError, DimensionError

Operand = Union[Tensor, float, int, np.ndarray]

BN_EPSILON = 1e-5
BN_MOMENTUM = 0.9
LEAKY_SLOPE = 0.2
LOG_FLOOR = 1e-8


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


# ── Elementwise arithmetic ────────────────────────────────────────────────────

def add(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def grad_fn(g):
        return unbroadcast(g, a.shape), unbroadcast(g, b.shape)

    return apply_op("add", a.data + b.data, (a, b), grad_fn)


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def grad_fn(g):
        return unbroadcast(g, a.shape), unbroadcast(-g, b.shape)

    return apply_op("sub", a.data - b.data, (a, b), grad_fn)


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def grad_fn(g):
        return unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)

    return apply_op("mul", a.data * b.data, (a, b), grad_fn)


def square(x: Tensor) -> Tensor:
    def grad_fn(g):
        return (2.0 * g * x.data,)

    return apply_op("square", x.data * x.data, (x,), grad_fn)


# ── Reductions and shape ops ──────────────────────────────────────────────────

def sum(x: Tensor) -> Tensor:  # noqa: A001
    def grad_fn(g):
        return (np.broadcast_to(g, x.shape).copy(),)

    return apply_op("sum", np.array(x.data.sum()), (x,), grad_fn)


def mean(x: Tensor) -> Tensor:
    count = x.size

    def grad_fn(g):
        return (np.broadcast_to(g / count, x.shape).copy(),)

    return apply_op("mean", np.array(x.data.mean()), (x,), grad_fn)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    try:
        out = x.data.reshape(shape)
    except ValueError as exc:
        raise DimensionError(f"cannot reshape {x.shape} to {shape}") from exc

    def grad_fn(g):
        return (g.reshape(x.shape),)

    return apply_op("reshape", out, (x,), grad_fn)


def concat(tensors: Sequence[Tensor], axis: int = 1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        shapes = ", ".join(str(t.shape) for t in tensors)
        raise DimensionError(f"cannot concatenate shapes {shapes} on axis {axis}") from exc
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def grad_fn(g):
        return tuple(np.split(g, bounds, axis=axis))

    return apply_op("concat", out, tensors, grad_fn)


def tile_spatial(x: Tensor, height: int, width: int) -> Tensor:
    """(n, c) → (n, c, height, width), every location a copy of the vector."""
    if x.ndim != 2:
        raise DimensionError(f"tile_spatial expects (n, c), got {x.shape}")
    out = np.broadcast_to(x.data[:, :, None, None], (*x.shape, height, width)).copy()

    def grad_fn(g):
        return (g.sum(axis=(2, 3)),)

    return apply_op("tile_spatial", out, (x,), grad_fn)


# ── Dense layer ───────────────────────────────────────────────────────────────

def affine(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """out = x @ weight + bias, x of shape (n, a), weight (a, b), bias (b,)."""
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[0]:
        raise DimensionError(f"affine: input {x.shape} incompatible with weight {weight.shape}")
    if bias is not None and bias.shape != (weight.shape[1],):
        raise DimensionError(f"affine: bias {bias.shape} does not match weight {weight.shape}")

    out = x.data @ weight.data
    if bias is not None:
        out = out + bias.data
    inputs = (x, weight) if bias is None else (x, weight, bias)

    def grad_fn(g):
        grads = [g @ weight.data.T, x.data.T @ g]
        if bias is not None:
            grads.append(g.sum(axis=0))
        return grads

    return apply_op("affine", out, inputs, grad_fn)


# ── Convolutions ──────────────────────────────────────────────────────────────

def _windows(padded: np.ndarray, k: int, stride: int) -> np.ndarray:
    """(n, c, H, W) → (n, c, h', w', k, k) strided patches, read-only view."""
    view = sliding_window_view(padded, (k, k), axis=(2, 3))
    return view[:, :, ::stride, ::stride]


def _correlate(padded: np.ndarray, kernel: np.ndarray, stride: int) -> np.ndarray:
    return np.einsum("nchwij,ocij->nohw", _windows(padded, kernel.shape[2], stride), kernel,
                     optimize=True)


def _check_kernel(kernel: Tensor, op: str) -> int:
    if kernel.ndim != 4 or kernel.shape[2] != kernel.shape[3]:
        raise DimensionError(f"{op}: kernel must be (a, b, k, k), got {kernel.shape}")
    return kernel.shape[2]


def conv2d(x: Tensor, kernel: Tensor, stride: int = 2, pad: int = 1,
           bias: Optional[Tensor] = None) -> Tensor:
    """Strided 2-D cross-correlation with zero padding."""
    k = _check_kernel(kernel, "conv2d")
    if x.ndim != 4 or x.shape[1] != kernel.shape[1]:
        raise DimensionError(f"conv2d: input {x.shape} incompatible with kernel {kernel.shape}")
    if stride < 1 or pad < 0:
        raise DimensionError(f"conv2d: invalid stride {stride} / pad {pad}")
    n, c, h, w = x.shape
    if k > h + 2 * pad or k > w + 2 * pad:
        raise DimensionError(f"conv2d: kernel {k}x{k} larger than padded input {h + 2 * pad}x{w + 2 * pad}")

    padded = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    out = _correlate(padded, kernel.data, stride)
    if bias is not None:
        out = out + bias.data[None, :, None, None]
    ho, wo = out.shape[2], out.shape[3]
    inputs = (x, kernel) if bias is None else (x, kernel, bias)

    def grad_fn(g):
        g_kernel = np.einsum("nchwij,nohw->ocij", _windows(padded, k, stride), g, optimize=True)
        g_padded = np.zeros_like(padded)
        for i in range(k):
            for j in range(k):
                g_padded[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += np.einsum(
                    "nohw,oc->nchw", g, kernel.data[:, :, i, j], optimize=True)
        g_x = g_padded[:, :, pad:pad + h, pad:pad + w]
        grads = [g_x, g_kernel]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return grads

    return apply_op("conv2d", out, inputs, grad_fn)


def deconv2d(x: Tensor, kernel: Tensor, stride: int = 2, pad: int = 1) -> Tensor:
    """
    Transposed convolution: the adjoint of conv2d with the same kernel array.

    Output size is (h - 1) * stride - 2 * pad + k; with k=4, stride=2, pad=1
    the spatial size doubles.
    """
    k = _check_kernel(kernel, "deconv2d")
    if x.ndim != 4 or x.shape[1] != kernel.shape[0]:
        raise DimensionError(f"deconv2d: input {x.shape} incompatible with kernel {kernel.shape}")
    if stride < 1 or pad < 0:
        raise DimensionError(f"deconv2d: invalid stride {stride} / pad {pad}")
    n, c, h, w = x.shape
    ho = (h - 1) * stride - 2 * pad + k
    wo = (w - 1) * stride - 2 * pad + k
    if ho < 1 or wo < 1:
        raise DimensionError(f"deconv2d: computed output size {ho}x{wo} is not positive")

    c_out = kernel.shape[1]
    full = np.zeros((n, c_out, ho + 2 * pad, wo + 2 * pad), dtype=x.data.dtype)
    for i in range(k):
        for j in range(k):
            full[:, :, i:i + stride * h:stride, j:j + stride * w:stride] += np.einsum(
                "nchw,co->nohw", x.data, kernel.data[:, :, i, j], optimize=True)
    out = full[:, :, pad:pad + ho, pad:pad + wo]

    def grad_fn(g):
        g_full = np.pad(g, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
        g_x = _correlate(g_full, kernel.data, stride)
        g_kernel = np.einsum("nohwij,nchw->coij", _windows(g_full, k, stride), x.data,
                             optimize=True)
        return g_x, g_kernel

    return apply_op("deconv2d", out, (x, kernel), grad_fn)


# ── Normalization ─────────────────────────────────────────────────────────────

@dataclass
class RunningStats:
    """Per-channel running mean / variance used by batchnorm in infer mode."""
    mean: np.ndarray
    var: np.ndarray

    @classmethod
    def fresh(cls, channels: int) -> "RunningStats":
        dtype = get_dtype()
        return cls(mean=np.zeros(channels, dtype=dtype), var=np.ones(channels, dtype=dtype))


def batchnorm(x: Tensor, gamma: Tensor, beta: Tensor,
              mode: Literal["train", "infer"] = "train",
              running: Optional[RunningStats] = None,
              momentum: float = BN_MOMENTUM, eps: float = BN_EPSILON) -> Tensor:
    """
    Per-channel batch normalization over (n, h, w) of an NCHW tensor.

    Train mode normalizes with the batch moments and folds them into `running`
    (unbiased variance); infer mode normalizes with `running`.
    """
    if x.ndim != 4:
        raise DimensionError(f"batchnorm expects NCHW input, got {x.shape}")
    n, c, h, w = x.shape
    if gamma.shape != (c,) or beta.shape != (c,):
        raise DimensionError(f"batchnorm: gamma {gamma.shape} / beta {beta.shape} vs {c} channels")

    g_shape = (1, c, 1, 1)
    if mode == "train":
        m = n * h * w
        if m < 2:
            raise DegenerateBatchError(f"batchnorm needs n*h*w >= 2 in train mode, got {m}")
        mu = x.data.mean(axis=(0, 2, 3))
        var = x.data.var(axis=(0, 2, 3))
        if running is not None:
            running.mean[...] = momentum * running.mean + (1.0 - momentum) * mu
            running.var[...] = momentum * running.var + (1.0 - momentum) * var * m / (m - 1)
    elif mode == "infer":
        if running is None:
            raise DimensionError("batchnorm in infer mode needs running statistics")
        m = None
        mu, var = running.mean, running.var
    else:
        raise ValueError(f"unknown batchnorm mode {mode!r}")

    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x.data - mu.reshape(g_shape)) * inv_std.reshape(g_shape)
    out = gamma.data.reshape(g_shape) * x_hat + beta.data.reshape(g_shape)

    def grad_fn(g):
        g_gamma = (g * x_hat).sum(axis=(0, 2, 3))
        g_beta = g.sum(axis=(0, 2, 3))
        g_hat = g * gamma.data.reshape(g_shape)
        scale = inv_std.reshape(g_shape)
        if m is None:
            return g_hat * scale, g_gamma, g_beta
        g_x = scale / m * (
            m * g_hat
            - g_hat.sum(axis=(0, 2, 3), keepdims=True)
            - x_hat * (g_hat * x_hat).sum(axis=(0, 2, 3), keepdims=True)
        )
        return g_x, g_gamma, g_beta

    return apply_op("batchnorm", out, (x, gamma, beta), grad_fn)


# ── Activations ───────────────────────────────────────────────────────────────

def leaky_relu(x: Tensor, slope: float = LEAKY_SLOPE) -> Tensor:
    positive = x.data >= 0
    out = np.where(positive, x.data, slope * x.data)

    def grad_fn(g):
        return (np.where(positive, g, slope * g),)

    return apply_op("leaky_relu", out, (x,), grad_fn)


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)

    def grad_fn(g):
        return (g * (1.0 - out * out),)

    return apply_op("tanh", out, (x,), grad_fn)


def sigmoid(x: Tensor) -> Tensor:
    out = expit(x.data)

    def grad_fn(g):
        return (g * out * (1.0 - out),)

    return apply_op("sigmoid", out, (x,), grad_fn)


def log(x: Tensor, floor: float = LOG_FLOOR) -> Tensor:
    """Natural log with the input clamped at `floor`; zero gradient below it."""
    clamped = np.maximum(x.data, floor)
    live = x.data > floor

    def grad_fn(g):
        return (np.where(live, g / clamped, 0.0),)

    return apply_op("log", np.log(clamped), (x,), grad_fn)


def softmax_cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean categorical cross-entropy of (n, C) logits against integer labels."""
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise DimensionError(f"cross-entropy: logits {logits.shape} vs labels {labels.shape}")
    n = logits.shape[0]
    rows = np.arange(n)
    log_probs = log_softmax(logits.data, axis=1)
    loss = -log_probs[rows, labels].mean()

    def grad_fn(g):
        probs = np.exp(log_probs)
        probs[rows, labels] -= 1.0
        return (g * probs / n,)

    return apply_op("softmax_cross_entropy", np.array(loss), (logits,), grad_fn)


def probabilities(logits: Tensor) -> np.ndarray:
    """Row-wise softmax, not recorded."""
    return softmax(logits.data.astype(np.float64), axis=1)
