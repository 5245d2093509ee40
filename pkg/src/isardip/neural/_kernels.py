"""Gather/scatter kernels behind the 5x5 convolutions.

Two interchangeable paths compute the same thing:

* numba ``@njit`` loops (default when numba imports), and
* a pure-numpy path (fancy indexing plus ``np.bincount``).

Set ``ISARDIP_DISABLE_NUMBA=1`` before import to force the numpy path. Both
produce bit-identical gathers; scatters agree to rounding of summation order.

Padding is expressed as index maps: ``rmap[i]`` is the source row for padded
row ``i`` (``-1`` for a zero pad), likewise ``cmap`` for columns.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("ISARDIP_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError("disabled by ISARDIP_DISABLE_NUMBA")
    from numba import njit
    NUMBA_AVAILABLE = True
except ImportError:
    NUMBA_AVAILABLE = False


def pad_index(n: int, pad: int, mode: str) -> np.ndarray:
    """Source index for each of the ``n + 2*pad`` padded positions."""
    idx = np.arange(-pad, n + pad)
    if mode == "zero":
        return np.where((idx >= 0) & (idx < n), idx, -1).astype(np.int64)
    if mode != "reflect":
        raise ValueError(f"unknown padding mode {mode!r}")
    if n == 1:
        return np.zeros(idx.size, dtype=np.int64)
    period = 2 * (n - 1)
    idx = np.mod(idx, period)
    return np.where(idx < n, idx, period - idx).astype(np.int64)


# numpy path ----------------------------------------------------------------

def _im2col_np(x, rmap, cmap, stride, oh, ow, k):
    C = x.shape[0]
    xp = x
    if (rmap < 0).any() or (cmap < 0).any():
        xp = np.concatenate([x, np.zeros((C, 1, x.shape[2]))], axis=1)
        xp = np.concatenate([xp, np.zeros((C, xp.shape[1], 1))], axis=2)
    padded = xp[:, rmap][:, :, cmap]
    win = np.lib.stride_tricks.sliding_window_view(padded, (k, k), axis=(1, 2))
    win = win[:, : (oh - 1) * stride + 1 : stride, : (ow - 1) * stride + 1 : stride]
    return np.ascontiguousarray(win.transpose(0, 3, 4, 1, 2))


def _col2im_np(cols, rmap, cmap, stride, h, w, k):
    C, _, _, oh, ow = cols.shape
    ki = np.arange(k)[:, None, None, None]
    kj = np.arange(k)[None, :, None, None]
    oy = np.arange(oh)[None, None, :, None]
    ox = np.arange(ow)[None, None, None, :]
    r = rmap[oy * stride + ki]
    c = cmap[ox * stride + kj]
    valid = (r >= 0) & (c >= 0)
    flat = np.where(valid, r * w + c, 0)
    flat = np.broadcast_to(flat, (k, k, oh, ow)).ravel()
    wts_valid = np.broadcast_to(valid, (k, k, oh, ow)).ravel()
    out = np.empty((C, h * w))
    for ch in range(C):
        vals = np.where(wts_valid, cols[ch].ravel(), 0.0)
        out[ch] = np.bincount(flat, weights=vals, minlength=h * w)
    return out.reshape(C, h, w)


# numba path ----------------------------------------------------------------

if NUMBA_AVAILABLE:

    @njit(cache=True)
    def _pad_nb(x, rmap, cmap):
        C = x.shape[0]
        out = np.zeros((C, rmap.size, cmap.size))
        for c in range(C):
            for i in range(rmap.size):
                r = rmap[i]
                if r < 0:
                    continue
                for j in range(cmap.size):
                    cc = cmap[j]
                    if cc >= 0:
                        out[c, i, j] = x[c, r, cc]
        return out

    @njit(cache=True)
    def _im2col_nb(x, rmap, cmap, stride, oh, ow, k):
        xp = _pad_nb(x, rmap, cmap)
        C = x.shape[0]
        out = np.empty((C, k, k, oh, ow))
        for c in range(C):
            for ki in range(k):
                for kj in range(k):
                    for oy in range(oh):
                        r = oy * stride + ki
                        for ox in range(ow):
                            out[c, ki, kj, oy, ox] = xp[c, r, ox * stride + kj]
        return out

    @njit(cache=True)
    def _col2im_nb(cols, rmap, cmap, stride, h, w, k):
        C = cols.shape[0]
        oh = cols.shape[3]
        ow = cols.shape[4]
        out = np.zeros((C, h, w))
        for c in range(C):
            for ki in range(k):
                for kj in range(k):
                    for oy in range(oh):
                        r = rmap[oy * stride + ki]
                        if r < 0:
                            continue
                        for ox in range(ow):
                            cc = cmap[ox * stride + kj]
                            if cc >= 0:
                                out[c, r, cc] += cols[c, ki, kj, oy, ox]
        return out

    im2col_impl, col2im_impl = _im2col_nb, _col2im_nb
    BACKEND = "numba"
else:
    im2col_impl, col2im_impl = _im2col_np, _col2im_np
    BACKEND = "numpy"


def im2col(x, rmap, cmap, stride, oh, ow, k, backend=None):
    """Patches of shape ``(C, k, k, oh, ow)`` read through the padding maps."""
    fn = {"numba": globals().get("_im2col_nb"), "numpy": _im2col_np}.get(backend) if backend else im2col_impl
    if fn is None:
        raise ValueError(f"backend {backend!r} unavailable")
    return fn(np.ascontiguousarray(x, dtype=np.float64), rmap, cmap, stride, oh, ow, k)


def col2im(cols, rmap, cmap, stride, h, w, k, backend=None):
    """Adjoint of :func:`im2col`: scatter-add patches back to ``(C, h, w)``."""
    fn = {"numba": globals().get("_col2im_nb"), "numpy": _col2im_np}.get(backend) if backend else col2im_impl
    if fn is None:
        raise ValueError(f"backend {backend!r} unavailable")
    return fn(np.ascontiguousarray(cols, dtype=np.float64), rmap, cmap, stride, h, w, k)
