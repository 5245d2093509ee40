"""Layer primitives on ``(C, H, W)`` float64 tensors with explicit backward passes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

KERNEL = 5
PAD = 2


@dataclass
class ConvLayer:
    weight: np.ndarray  # (out_ch, in_ch, 5, 5)
    bias: np.ndarray  # (out_ch,)
    stride: int = 1
    padding: str = "reflect"

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 4 or self.weight.shape[2:] != (KERNEL, KERNEL):
            raise ValueError("weight must have shape (out_ch, in_ch, 5, 5)")
        if self.bias.shape != (self.weight.shape[0],):
            raise ValueError("bias must have one entry per output channel")
        if self.stride not in (1, 2):
            raise ValueError("stride must be 1 or 2")

    @property
    def in_ch(self) -> int:
        return self.weight.shape[1]

    @property
    def out_ch(self) -> int:
        return self.weight.shape[0]

    @classmethod
    def init(cls, in_ch: int, out_ch: int, rng: np.random.Generator,
             stride: int = 1, padding: str = "reflect") -> "ConvLayer":
        """Uniform ``[-a, a]`` weights with ``a = sqrt(1 / (25 * in_ch))``, zero bias."""
        a = np.sqrt(1.0 / (in_ch * KERNEL * KERNEL))
        w = rng.uniform(-a, a, size=(out_ch, in_ch, KERNEL, KERNEL))
        return cls(w, np.zeros(out_ch), stride, padding)


def out_size(n: int, stride: int) -> int:
    return (n + 2 * PAD - KERNEL) // stride + 1


def _maps(x_shape, layer):
    _, h, w = x_shape
    return (_kernels.pad_index(h, PAD, layer.padding),
            _kernels.pad_index(w, PAD, layer.padding),
            out_size(h, layer.stride), out_size(w, layer.stride))


def conv2d_forward(x: np.ndarray, layer: ConvLayer, return_cols: bool = False):
    """Cross-correlation with 5x5 kernels and width-2 padding.

    Stride 2 gives ``ceil(H/2) x ceil(W/2)`` outputs. With ``return_cols`` the
    im2col patch matrix is returned too so the backward pass can reuse it.
    """
    if x.ndim != 3 or x.shape[0] != layer.in_ch:
        raise ValueError(f"expected {layer.in_ch} input channels, got shape {x.shape}")
    rmap, cmap, oh, ow = _maps(x.shape, layer)
    cols = _kernels.im2col(x, rmap, cmap, layer.stride, oh, ow, KERNEL)
    cols2 = cols.reshape(-1, oh * ow)
    y = layer.weight.reshape(layer.out_ch, -1) @ cols2
    y += layer.bias[:, None]
    y = y.reshape(layer.out_ch, oh, ow)
    return (y, cols) if return_cols else y


def conv2d_backward(x: np.ndarray, layer: ConvLayer, grad_out: np.ndarray, cols=None):
    """Return ``(grad_x, grad_weight, grad_bias)`` for :func:`conv2d_forward`."""
    rmap, cmap, oh, ow = _maps(x.shape, layer)
    if grad_out.shape != (layer.out_ch, oh, ow):
        raise ValueError(f"grad_out shape {grad_out.shape} != {(layer.out_ch, oh, ow)}")
    if cols is None:
        cols = _kernels.im2col(x, rmap, cmap, layer.stride, oh, ow, KERNEL)
    g = grad_out.reshape(layer.out_ch, -1)
    grad_w = (g @ cols.reshape(-1, oh * ow).T).reshape(layer.weight.shape)
    grad_b = g.sum(axis=1)
    gcols = (layer.weight.reshape(layer.out_ch, -1).T @ g).reshape(cols.shape)
    grad_x = _kernels.col2im(gcols, rmap, cmap, layer.stride, x.shape[1], x.shape[2], KERNEL)
    return grad_x, grad_w, grad_b


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def swish(x: np.ndarray) -> np.ndarray:
    return x * _sigmoid(x)


def swish_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    s = _sigmoid(x)
    return grad_out * s * (1.0 + x * (1.0 - s))


def upsample(x: np.ndarray) -> np.ndarray:
    """Nearest-neighbour 2x upsampling."""
    return x.repeat(2, axis=1).repeat(2, axis=2)


def upsample_backward(grad_out: np.ndarray) -> np.ndarray:
    c, h, w = grad_out.shape
    return grad_out.reshape(c, h // 2, 2, w // 2, 2).sum(axis=(2, 4))


def center_crop(x: np.ndarray, h: int, w: int) -> np.ndarray:
    top = (x.shape[1] - h) // 2
    left = (x.shape[2] - w) // 2
    return x[:, top:top + h, left:left + w]


def center_crop_backward(grad_out: np.ndarray, full_shape) -> np.ndarray:
    g = np.zeros(full_shape)
    h, w = grad_out.shape[1:]
    top = (full_shape[1] - h) // 2
    left = (full_shape[2] - w) // 2
    g[:, top:top + h, left:left + w] = grad_out
    return g


def instance_norm(x: np.ndarray, eps: float = 1e-5):
    """Per-channel standardisation over the spatial axes (no affine terms)."""
    mu = x.mean(axis=(1, 2), keepdims=True)
    var = x.var(axis=(1, 2), keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv
    return xhat, (xhat, inv)


def instance_norm_backward(cache, grad_out: np.ndarray) -> np.ndarray:
    xhat, inv = cache
    n = xhat.shape[1] * xhat.shape[2]
    g_mean = grad_out.mean(axis=(1, 2), keepdims=True)
    gx_mean = (grad_out * xhat).sum(axis=(1, 2), keepdims=True) / n
    return inv * (grad_out - g_mean - xhat * gx_mean)
