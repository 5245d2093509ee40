"""Deep-image-prior completion of complex echo matrices.

Each real part is normalised to ``[0, 1]`` on its observed entries, fitted by
a freshly initialised :class:`~isardip.neural.SkipNet` driven by a fixed
noise code, and mapped back. Real and imaginary parts get independent
networks and are merged at the end.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .metrics import snr_db
from .neural import AdamState, NetworkConfig, SkipNet, adam_step
from .sampling import Mask, merge_complex, split_complex

log = logging.getLogger(__name__)


@dataclass
class EarlyStop:
    rel_improve: float = 0.01
    patience: int = 3
    check_every: int = 10
    enabled: bool = True

    def __post_init__(self):
        if not 0 < self.rel_improve < 1:
            raise ValueError("rel_improve must lie in (0, 1)")
        if self.patience < 1 or self.check_every < 1:
            raise ValueError("patience and check_every must be >= 1")


@dataclass
class DipConfig:
    net: NetworkConfig = field(default_factory=NetworkConfig)
    max_iters: int = 10_000
    lr: float = 1e-3
    input_noise_std: float = 0.1
    noise_channels: int = 16
    early_stop: EarlyStop = field(default_factory=EarlyStop)
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.noise_channels < 1 or self.input_noise_std < 0 or self.lr < 0:
            raise ValueError("invalid DIP configuration")


@dataclass(frozen=True)
class NormalizationRecord:
    lo: float
    hi: float

    @property
    def degenerate(self) -> bool:
        return self.hi == self.lo


@dataclass
class Trace:
    iters: list[int] = field(default_factory=list)
    loss: list[float] = field(default_factory=list)
    snr_db: list[float] = field(default_factory=list)  # nan between checks
    elapsed_s: list[float] = field(default_factory=list)
    stopped_early: bool = False
    degenerate: bool = False

    def __len__(self):
        return len(self.loss)

    def rows(self):
        for row in zip(self.iters, self.loss, self.snr_db, self.elapsed_s):
            yield row

    def write_csv(self, path, deterministic: bool = False) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "loss", "snr_db", "elapsed_s"])
            for it, loss, snr, el in self.rows():
                w.writerow([it, repr(loss), "nan" if np.isnan(snr) else repr(snr),
                            "0.0" if deterministic else f"{el:.6f}"])


# normalisation ---------------------------------------------------------------

def normalize(part: np.ndarray, mask: Mask) -> tuple[np.ndarray, NormalizationRecord]:
    obs = mask.observed
    if not obs.any():
        raise ValueError("mask has no observed entry")
    vals = part[obs]
    rec = NormalizationRecord(float(vals.min()), float(vals.max()))
    if rec.degenerate:
        return np.full(part.shape, 0.5), rec
    return (part - rec.lo) / (rec.hi - rec.lo), rec


def denormalize(y: np.ndarray, rec: NormalizationRecord) -> np.ndarray:
    if rec.degenerate:
        return np.full(np.shape(y), rec.lo)
    return np.asarray(y) * (rec.hi - rec.lo) + rec.lo


# loss --------------------------------------------------------------------------

def masked_mse(pred: np.ndarray, target: np.ndarray, mask: Mask) -> tuple[float, np.ndarray]:
    """Mean squared error over observed entries and its gradient w.r.t. ``pred``.

    The gradient is exactly zero off the mask.
    """
    obs = mask.observed
    if pred.shape != target.shape or pred.shape != obs.shape:
        raise ValueError("shape mismatch")
    n = int(obs.sum())
    if n == 0:
        raise ValueError("mask has no observed entry")
    diff = np.where(obs, pred - target, 0.0)
    return float(np.sum(diff * diff) / n), 2.0 * diff / n


def check_snr_early_stop(history, rel_improve: float = 0.01, patience: int = 3) -> bool:
    """True when the last ``patience`` relative SNR improvements are each
    ``<= rel_improve``.
    """
    h = list(history)
    if len(h) < patience + 1:
        return False
    for prev, cur in zip(h[-patience - 1:-1], h[-patience:]):
        if prev == 0:
            return False
        if (cur - prev) / abs(prev) > rel_improve:
            return False
    return True


# driver --------------------------------------------------------------------------

def make_code(cfg: DipConfig, shape: tuple[int, int], seed: int) -> np.ndarray:
    rng = np.random.default_rng([seed, 1])
    return rng.normal(0.0, cfg.input_noise_std, size=(cfg.noise_channels, *shape))


def dip_complete_part(part: np.ndarray, mask: Mask, cfg: DipConfig, seed: int | None = None
                      ) -> tuple[np.ndarray, Trace]:
    """Fit one real part with a deep-image-prior network.

    Returns the denormalised output with the lowest observed-entry loss seen
    during the run, plus the per-iteration trace.
    """
    part = np.asarray(part, dtype=np.float64)
    if part.shape != mask.shape:
        raise ValueError("dimension mismatch between data and mask")
    if not np.all(np.isfinite(part)):
        raise ValueError("part contains non-finite values")
    seed = cfg.seed if seed is None else seed
    target, rec = normalize(part, mask)
    trace = Trace()
    if rec.degenerate:
        log.warning("constant observed part; returning constant %.6g", rec.lo)
        trace.degenerate = True
        return denormalize(target, rec), trace

    net_cfg = NetworkConfig(**{**cfg.net.__dict__, "seed": seed})
    net = SkipNet(net_cfg, cfg.noise_channels)
    z = make_code(cfg, part.shape, seed)
    state = AdamState(lr=cfg.lr)
    params = net.parameters()
    es = cfg.early_stop
    history: list[float] = []
    obs_vals = part[mask.observed]
    best_loss, best = np.inf, None
    t0 = time.perf_counter()
    for it in range(1, cfg.max_iters + 1):
        out = net.forward(z)[0]
        loss, grad = masked_mse(out, target, mask)
        if loss <= best_loss:
            best_loss, best = loss, out
        grads = net.backward(grad[None])
        adam_step(params, grads, state)
        snr = np.nan
        if it % es.check_every == 0:
            # scored on the data scale; the [0, 1] offset would inflate it
            snr = snr_db(obs_vals, denormalize(out[mask.observed], rec))
            history.append(snr)
        trace.iters.append(it)
        trace.loss.append(loss)
        trace.snr_db.append(snr)
        trace.elapsed_s.append(time.perf_counter() - t0)
        if not np.isfinite(loss):
            raise FloatingPointError(f"loss diverged at iteration {it}")
        if es.enabled and not np.isnan(snr) and check_snr_early_stop(history, es.rel_improve, es.patience):
            trace.stopped_early = True
            break
    return denormalize(best, rec), trace


def dip_complete_complex(M: np.ndarray, mask: Mask, cfg: DipConfig
                         ) -> tuple[np.ndarray, tuple[Trace, Trace]]:
    """Complete real and imaginary parts independently (seeds ``s`` and ``s ^ 1``)."""
    re, im = split_complex(M)
    re_out, re_trace = dip_complete_part(re, mask, cfg, seed=cfg.seed)
    im_out, im_trace = dip_complete_part(im, mask, cfg, seed=cfg.seed ^ 1)
    return merge_complex(re_out, im_out), (re_trace, im_trace)
