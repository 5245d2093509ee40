"""Minimal differentiable substrate for the deep-image-prior generator."""

from ._kernels import BACKEND, NUMBA_AVAILABLE
from .adam import AdamState, adam_step
from .layers import (ConvLayer, conv2d_backward, conv2d_forward, swish,
                     swish_backward, upsample, upsample_backward)
from .skipnet import NetworkConfig, SkipNet

__all__ = [
    "BACKEND", "NUMBA_AVAILABLE", "AdamState", "adam_step", "ConvLayer",
    "conv2d_backward", "conv2d_forward", "swish", "swish_backward", "upsample",
    "upsample_backward", "NetworkConfig", "SkipNet",
]
