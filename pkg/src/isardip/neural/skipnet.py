"""Encoder-decoder generator with convolutional skip branches.

With ``L = depth // 2`` levels and input ``e_0 = z``::

    e_{i+1} = act(conv_s2(e_i))                    encoder, i = 0..L-1
    s_i     = act(skipconv_i(e_i))                 skip branch per level
    u_L     = e_L
    u_i     = act(conv_i([crop(up(u_{i+1})), s_i]))  decoder, i = L-1..0
    out     = conv_out(u_0)                        1 channel, linear

``channels[:L]`` are the encoder widths (shallow to deep) and ``channels[L:]``
the decoder widths (deep to shallow). Skip branches are always open (gate 1),
merged by channel concatenation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import layers as L_
from .layers import ConvLayer


@dataclass
class NetworkConfig:
    depth: int = 6
    channels: tuple[int, ...] = (256, 128, 64, 64, 128, 256)
    skip_channels: int = 16
    activation: str = "swish"
    seed: int = 0
    padding: str = "reflect"
    instance_norm: bool = False

    def __post_init__(self):
        self.channels = tuple(int(c) for c in self.channels)
        if self.depth != len(self.channels):
            raise ValueError("depth must equal len(channels)")
        if self.depth < 2 or self.depth % 2:
            raise ValueError("depth must be an even number >= 2")
        if min(self.channels) < 1 or self.skip_channels < 1:
            raise ValueError("channel widths must be >= 1")
        if self.activation != "swish":
            raise ValueError("only the swish activation is supported")
        if self.padding not in ("reflect", "zero"):
            raise ValueError("padding must be 'reflect' or 'zero'")

    @property
    def levels(self) -> int:
        return self.depth // 2


class SkipNet:
    """Generator mapping a fixed ``(channels, H, W)`` noise code to a ``(1, H, W)`` image."""

    def __init__(self, cfg: NetworkConfig, in_channels: int):
        self.cfg = cfg
        self.in_channels = in_channels
        rng = np.random.default_rng(cfg.seed)
        Lv = cfg.levels
        enc_w = cfg.channels[:Lv]
        dec_w = cfg.channels[Lv:][::-1]  # indexed by level, shallow first
        pad = cfg.padding
        self.layers: dict[str, ConvLayer] = {}
        for i in range(Lv):
            cin = in_channels if i == 0 else enc_w[i - 1]
            self.layers[f"enc{i}"] = ConvLayer.init(cin, enc_w[i], rng, 2, pad)
        for i in range(Lv):
            cin = in_channels if i == 0 else enc_w[i - 1]
            self.layers[f"skip{i}"] = ConvLayer.init(cin, cfg.skip_channels, rng, 1, pad)
        for i in reversed(range(Lv)):
            up_ch = enc_w[-1] if i == Lv - 1 else dec_w[i + 1]
            self.layers[f"dec{i}"] = ConvLayer.init(up_ch + cfg.skip_channels, dec_w[i], rng, 1, pad)
        self.layers["out"] = ConvLayer.init(dec_w[0], 1, rng, 1, pad)
        self._cache = None

    # parameters ------------------------------------------------------------

    def parameters(self) -> dict[str, np.ndarray]:
        """Name -> array views of every weight and bias (mutable in place)."""
        out = {}
        for name, layer in self.layers.items():
            out[f"{name}.weight"] = layer.weight
            out[f"{name}.bias"] = layer.bias
        return out

    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters().values())

    # forward / backward ----------------------------------------------------

    def _block(self, name, x, act, cache):
        y, cols = L_.conv2d_forward(x, self.layers[name], return_cols=True)
        entry = {"x": x, "cols": cols}
        if self.cfg.instance_norm and act:
            y, entry["norm"] = L_.instance_norm(y)
        if act:
            entry["pre"] = y
            y = L_.swish(y)
        cache[name] = entry
        return y

    def _block_backward(self, name, g, grads):
        entry = self._cache[name]
        if "pre" in entry:
            g = L_.swish_backward(entry["pre"], g)
        if "norm" in entry:
            g = L_.instance_norm_backward(entry["norm"], g)
        layer = self.layers[name]
        gx, gw, gb = L_.conv2d_backward(entry["x"], layer, g, cols=entry["cols"])
        grads[f"{name}.weight"] = gw
        grads[f"{name}.bias"] = gb
        return gx

    def forward(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if z.ndim != 3 or z.shape[0] != self.in_channels:
            raise ValueError(f"code must have shape ({self.in_channels}, H, W), got {z.shape}")
        Lv = self.cfg.levels
        cache = {}
        e = [z]
        for i in range(Lv):
            e.append(self._block(f"enc{i}", e[i], True, cache))
        s = [self._block(f"skip{i}", e[i], True, cache) for i in range(Lv)]
        u = e[Lv]
        shapes = {}
        for i in reversed(range(Lv)):
            up = L_.upsample(u)
            h, w = e[i].shape[1:]
            if up.shape[1] < h or up.shape[2] < w:
                raise ValueError("incompatible code dimensions")
            shapes[i] = (up.shape, u.shape[0])
            cat = np.concatenate([L_.center_crop(up, h, w), s[i]], axis=0)
            u = self._block(f"dec{i}", cat, True, cache)
        out = self._block("out", u, False, cache)
        cache["_shapes"] = shapes
        self._cache = cache
        return out

    def backward(self, grad_out: np.ndarray, input_grad: bool = False):
        """Gradients of all parameters given ``dLoss/dOut``; consumes the cache.

        Returns ``grads`` or ``(grads, grad_z)`` when ``input_grad`` is set.
        """
        if self._cache is None:
            raise RuntimeError("backward called without a preceding forward")
        Lv = self.cfg.levels
        shapes = self._cache["_shapes"]
        grads: dict[str, np.ndarray] = {}
        g = self._block_backward("out", grad_out, grads)
        ge = [None] * (Lv + 1)
        gs = [None] * Lv
        for i in range(Lv):
            gcat = self._block_backward(f"dec{i}", g, grads)
            up_shape, up_ch = shapes[i]
            g_up = L_.center_crop_backward(gcat[:up_ch], up_shape)
            gs[i] = gcat[up_ch:]
            g = L_.upsample_backward(g_up)
        ge[Lv] = g
        for i in range(Lv):
            gx = self._block_backward(f"skip{i}", gs[i], grads)
            ge[i] = gx if ge[i] is None else ge[i] + gx
        for i in reversed(range(Lv)):
            gx = self._block_backward(f"enc{i}", ge[i + 1], grads)
            ge[i] = ge[i] + gx
        self._cache = None
        grads = {k: grads[k] for k in self.parameters()}
        return (grads, ge[0]) if input_grad else grads
