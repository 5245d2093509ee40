"""Observation masks, the sampling operator and the scatter pre-transformation.

All randomness comes from numpy's PCG64 generator (``np.random.default_rng``)
seeded with the caller's integer, so masks are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("pixel", "column", "compressed")

MAX_PRETRANSFORM_ATTEMPTS = 16


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


@dataclass
class Mask:
    observed: np.ndarray  # bool, True = observed entry
    kind: str
    requested_ratio: float
    seed: int

    def __post_init__(self):
        self.observed = np.asarray(self.observed, dtype=bool)
        if self.observed.ndim != 2:
            raise ValueError("mask must be 2-D")
        if self.kind not in KINDS:
            raise ValueError(f"unknown mask kind {self.kind!r}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.observed.shape

    @property
    def missing_ratio(self) -> float:
        return 1.0 - self.observed.mean()

    def __eq__(self, other):
        if not isinstance(other, Mask):
            return NotImplemented
        return (self.kind == other.kind and self.requested_ratio == other.requested_ratio
                and self.seed == other.seed and np.array_equal(self.observed, other.observed))


@dataclass(frozen=True)
class Permutation:
    forward: np.ndarray  # permuted.flat[i] = original.flat[forward[i]]
    inverse: np.ndarray

    @classmethod
    def from_forward(cls, forward: np.ndarray) -> "Permutation":
        forward = np.asarray(forward, dtype=np.int64)
        inverse = np.empty_like(forward)
        inverse[forward] = np.arange(forward.size)
        return cls(forward, inverse)


def gen_mask(kind: str, ratio: float, rows: int, cols: int, seed: int) -> Mask:
    """Draw a missing-data mask.

    ``pixel`` removes exactly ``round(ratio*rows*cols)`` entries chosen by a
    seeded shuffle, ``column`` removes ``round(ratio*cols)`` whole columns, and
    ``compressed`` removes ``round(ratio*rows)`` whole rows and
    ``round(ratio*cols)`` whole columns drawn independently.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown mask kind {kind!r}")
    if not 0.0 <= ratio < 1.0:
        raise ValueError("ratio must lie in [0, 1)")
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    rng = np.random.default_rng(seed)
    observed = np.ones((rows, cols), dtype=bool)
    if kind == "pixel":
        n_miss = _round_half_up(ratio * rows * cols)
        if n_miss >= rows * cols:
            raise ValueError("no observed entry")
        observed.flat[rng.permutation(rows * cols)[:n_miss]] = False
    else:
        n_cols = _round_half_up(ratio * cols)
        if n_cols >= cols:
            raise ValueError("no observed column")
        if kind == "compressed":
            n_rows = _round_half_up(ratio * rows)
            if n_rows >= rows:
                raise ValueError("no observed row")
            observed[rng.permutation(rows)[:n_rows], :] = False
        observed[:, rng.permutation(cols)[:n_cols]] = False
    return Mask(observed, kind, float(ratio), int(seed))


def full_mask(rows: int, cols: int) -> Mask:
    return gen_mask("pixel", 0.0, rows, cols, 0)


def _check_shape(M: np.ndarray, shape: tuple[int, int]) -> None:
    if M.shape != tuple(shape):
        raise ValueError(f"dimension mismatch: {M.shape} vs {tuple(shape)}")


def apply_mask(M: np.ndarray, mask: Mask) -> np.ndarray:
    """Sampling operator: keep observed entries, set the rest to exactly 0."""
    M = np.asarray(M)
    _check_shape(M, mask.shape)
    return np.where(mask.observed, M, np.zeros((), dtype=M.dtype))


def pretransform(M: np.ndarray, mask: Mask, seed: int
                 ) -> tuple[np.ndarray, Mask, Permutation]:
    """Scatter the entries of ``M`` and ``mask`` by one random permutation so
    that every row and column of the permuted mask holds an observation.

    Attempts use seeds ``seed, seed+1, ...`` up to 16 draws.
    """
    M = np.asarray(M)
    _check_shape(M, mask.shape)
    size = M.size
    for attempt in range(MAX_PRETRANSFORM_ATTEMPTS):
        rng = np.random.default_rng(seed + attempt)
        perm = Permutation.from_forward(rng.permutation(size))
        obs = mask.observed.ravel()[perm.forward].reshape(mask.shape)
        if obs.any(axis=0).all() and obs.any(axis=1).all():
            Mp = M.ravel()[perm.forward].reshape(M.shape)
            return Mp, Mask(obs, mask.kind, mask.requested_ratio, mask.seed), perm
    raise ValueError("pattern too sparse for pre-transformation")


def invert_pretransform(M: np.ndarray, perm: Permutation) -> np.ndarray:
    M = np.asarray(M)
    if M.size != perm.forward.size:
        raise ValueError("size mismatch between matrix and permutation")
    return M.ravel()[perm.inverse].reshape(M.shape)


def invert_mask(mask: Mask, perm: Permutation) -> Mask:
    obs = invert_pretransform(mask.observed, perm)
    return Mask(obs, mask.kind, mask.requested_ratio, mask.seed)


def split_complex(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    M = np.asarray(M)
    return np.ascontiguousarray(M.real, dtype=np.float64), np.ascontiguousarray(M.imag, dtype=np.float64)


def merge_complex(re: np.ndarray, im: np.ndarray) -> np.ndarray:
    re = np.asarray(re, dtype=np.float64)
    im = np.asarray(im, dtype=np.float64)
    if re.shape != im.shape:
        raise ValueError(f"dimension mismatch: {re.shape} vs {im.shape}")
    out = np.empty(re.shape, dtype=np.complex128)
    out.real = re
    out.imag = im
    return out
