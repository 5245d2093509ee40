"""Image quality metrics and noise injection.

Complex images are scored on their magnitudes.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

SNR_CAP_DB = 300.0

CSV_COLUMNS = ("method", "scenario", "ratio", "seed", "rmse", "correlation",
               "contrast", "snr_db", "runtime_s", "iterations", "converged")


def _mag(x) -> np.ndarray:
    x = np.asarray(x)
    return np.abs(x) if np.iscomplexobj(x) else x.astype(np.float64, copy=False)


def _same_shape(a, b):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def rmse(ref, est) -> float:
    """Relative error ``||I - I_hat||_F / ||I||_F``."""
    I, Ih = _mag(ref), _mag(est)
    _same_shape(I, Ih)
    nrm = np.linalg.norm(I)
    if nrm == 0:
        raise ValueError("zero reference")
    return float(np.linalg.norm(I - Ih) / nrm)


def correlation(ref, est) -> float:
    """Pearson correlation of the vectorised images (sample std, N - 1)."""
    I, Ih = _mag(ref).ravel(), _mag(est).ravel()
    _same_shape(I, Ih)
    n = I.size
    if n < 2:
        raise ValueError("zero variance")
    sI, sH = I.std(ddof=1), Ih.std(ddof=1)
    if sI == 0 or sH == 0:
        raise ValueError("zero variance")
    return float(np.sum((I - I.mean()) / sI * ((Ih - Ih.mean()) / sH)) / (n - 1))


def image_contrast(est) -> float:
    """Mean absolute deviation of the intensity ``I^2`` over its mean."""
    P = _mag(est) ** 2
    mu = P.mean()
    if mu == 0:
        raise ValueError("all-zero image")
    return float(np.mean(np.abs(P - mu)) / mu)


def snr_db(reference, estimate) -> float:
    """``10 log10(||ref||^2 / ||ref - est||^2)``, capped at 300 dB."""
    ref = np.asarray(reference)
    est = np.asarray(estimate)
    _same_shape(ref, est)
    sig = float(np.sum(np.abs(ref) ** 2))
    err = float(np.sum(np.abs(ref - est) ** 2))
    if err == 0:
        return SNR_CAP_DB
    if sig == 0:
        return -SNR_CAP_DB
    return float(min(10.0 * np.log10(sig / err), SNR_CAP_DB))


def add_noise(M: np.ndarray, snr: float, seed: int) -> np.ndarray:
    """Add circular complex Gaussian noise at exactly ``snr`` dB (empirical).

    The drawn noise is rescaled so its total power is ``P_signal / 10^(snr/10)``;
    ``snr = inf`` returns ``M`` unchanged.
    """
    M = np.asarray(M)
    if np.isposinf(snr):
        return M.copy()
    power = float(np.sum(np.abs(M) ** 2))
    if power == 0:
        raise ValueError("zero-power input")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(M.shape) + 1j * rng.standard_normal(M.shape)
    noise *= np.sqrt(power / 10 ** (snr / 10.0) / np.sum(np.abs(noise) ** 2))
    return M + noise


@dataclass
class MetricsReport:
    method: str
    scenario: str
    ratio: float
    seed: int
    rmse: float = float("nan")
    correlation: float = float("nan")
    contrast: float = float("nan")
    snr_db: float = float("nan")
    runtime_s: float = 0.0
    iterations: int = 0
    converged: bool = True
    error: str = ""

    def ok(self) -> bool:
        """Range invariants hold (NaN metrics only allowed on failed cells)."""
        if not (self.method and self.scenario):
            return False
        if self.error:
            return True
        return (self.rmse >= 0 and -1 - 1e-12 <= self.correlation <= 1 + 1e-12
                and self.contrast >= 0 and self.runtime_s >= 0 and self.iterations >= 0)

    def csv_row(self) -> list[str]:
        d = asdict(self)
        out = []
        for col in CSV_COLUMNS:
            v = d[col]
            if isinstance(v, bool):
                out.append("1" if v else "0")
            elif isinstance(v, float):
                out.append(repr(round(v, 12)) if np.isfinite(v) else "nan")
            else:
                out.append(str(v))
        return out


def score_images(ref_img: np.ndarray, est_img: np.ndarray) -> dict[str, float]:
    """RMSE, correlation and contrast of ``est_img`` against ``ref_img``."""
    out = {"rmse": rmse(ref_img, est_img), "contrast": image_contrast(est_img)}
    try:
        out["correlation"] = correlation(ref_img, est_img)
    except ValueError:
        out["correlation"] = float("nan")
    return out
