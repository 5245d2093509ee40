"""Low-rank matrix completion: SVT proximal gradient (NNM) and inexact ALM.

Both solvers return a :class:`CompletionResult`; failure to converge is not
an exception, the best iterate is returned with ``converged=False``. A mask
with an entirely unobserved row or column is also reported as not converged:
nuclear-norm minimisation fills such lines with zeros.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .sampling import Mask

log = logging.getLogger(__name__)


@dataclass
class SolverConfig:
    """Settings shared by both solvers.

    ``delta``, ``tau`` and ``mu0`` default to ``None``, meaning "scale to the
    data": ``delta = 1e-6 * ||P(M)||_F``, ``tau = ||P(M)||_F / 4`` and
    ``mu0 = 1 / ||P(M)||_2``.
    """
    delta: float | None = None
    max_iters: int = 10_000
    tol: float = 1e-5
    tau: float | None = None
    step: float = 1.0
    tau_decay: float = 0.5  # NNM continuation factor between threshold levels
    polish: float = 1e-2  # NNM step tolerance is tol * polish
    mu0: float | None = None
    rho: float = 1.1

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 < self.tol < 1:
            raise ValueError("tol must lie in (0, 1)")
        if self.rho <= 1:
            raise ValueError("rho must exceed 1")
        if not 0 < self.polish <= 1:
            raise ValueError("polish must lie in (0, 1]")
        if self.step <= 0 or not 0 < self.tau_decay <= 1:
            raise ValueError("step must be positive and tau_decay in (0, 1]")
        for name in ("delta", "tau", "mu0"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class SvdFactors:
    U: np.ndarray
    S: np.ndarray
    Vh: np.ndarray  # conjugate transpose of V

    def reconstruct(self, S: np.ndarray | None = None) -> np.ndarray:
        S = self.S if S is None else S
        return (self.U * S) @ self.Vh


@dataclass
class CompletionResult:
    Z: np.ndarray
    converged: bool
    iterations: int
    residual: float  # ||P(Z - M)||_F
    objective: list[float] = field(default_factory=list)


def svd(A: np.ndarray) -> SvdFactors:
    """Thin SVD backed by LAPACK's divide-and-conquer driver."""
    A = np.asarray(A)
    if not np.all(np.isfinite(A)):
        raise ValueError("svd input contains non-finite values")
    try:
        U, S, Vh = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"svd did not converge: {exc}") from exc
    return SvdFactors(U, S, Vh)


def shrink_singular(A: np.ndarray, tau: float) -> np.ndarray:
    """Singular value soft-thresholding, the prox of ``tau * ||.||_*``."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    f = svd(A)
    return f.reconstruct(np.maximum(f.S - tau, 0.0))


def _shrink_with_norm(A: np.ndarray, tau: float) -> tuple[np.ndarray, float]:
    f = svd(A)
    s = np.maximum(f.S - tau, 0.0)
    return f.reconstruct(s), float(s.sum())


def has_empty_line(mask: Mask) -> bool:
    """True when some row or column of the mask has no observed entry."""
    obs = mask.observed
    return bool((~obs.any(axis=0)).any() or (~obs.any(axis=1)).any())


def _observed_norm(D: np.ndarray) -> float:
    nrm = np.linalg.norm(D)
    if nrm == 0:
        raise ValueError("observed entries are all zero")
    return float(nrm)


def complete_nnm(M_obs: np.ndarray, mask: Mask, cfg: SolverConfig | None = None) -> CompletionResult:
    """Nuclear-norm completion of a real matrix by SVT proximal gradient.

    Minimises ``tau*||Z||_* + 0.5*||P(Z - M)||_F^2`` with the monotone
    variant of accelerated proximal gradient (each step is
    ``shrink(Y + step * P(M - Y), tau)`` from an extrapolated point ``Y``, and
    the step is only accepted if it does not raise the objective). ``tau``
    follows a continuation path: it starts at ``cfg.tau`` and is multiplied by
    ``tau_decay`` whenever the relative prox-gradient step falls below
    ``tol * polish``, down to a floor of ``delta/100``. The step is scaled by
    ``polish`` because near the interpolating solution the iteration error is
    about a hundred times the last step. The run succeeds once the floor is
    reached, the step test passes and ``||P(Z - M)||_F <= delta``.

    ``objective[k]`` is the value at the accepted iterate under the threshold
    in force at step ``k``; it never increases since ``tau`` only shrinks.
    """
    cfg = cfg or SolverConfig()
    M_obs = np.asarray(M_obs)
    if np.iscomplexobj(M_obs):
        raise TypeError("complete_nnm works on real data; split complex input first")
    obs = mask.observed
    if M_obs.shape != obs.shape:
        raise ValueError("dimension mismatch between data and mask")
    if not obs.any():
        raise ValueError("mask has no observed entry")
    M_obs = np.asarray(M_obs, dtype=np.float64)
    D = np.where(obs, M_obs, 0.0)
    nrm = _observed_norm(D)
    delta = cfg.delta if cfg.delta is not None else 1e-6 * nrm
    tau = cfg.tau if cfg.tau is not None else nrm / 4.0
    # floor keeps the fixed point inside the delta-ball of the data
    tau_min = min(tau, 1e-2 * delta)
    step_tol = cfg.tol * cfg.polish

    X = np.zeros_like(D)
    X_nuc, X_res = 0.0, nrm
    Y = X
    t = 1.0
    objective = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        Zc, nuc = _shrink_with_norm(Y + cfg.step * np.where(obs, D - Y, 0.0), tau)
        res = float(np.linalg.norm(np.where(obs, Zc - D, 0.0)))
        X_prev = X
        if tau * nuc + 0.5 * res ** 2 <= tau * X_nuc + 0.5 * X_res ** 2:
            X, X_nuc, X_res = Zc, nuc, res
        objective.append(tau * X_nuc + 0.5 * X_res ** 2)
        change = np.linalg.norm(Zc - Y) / max(np.linalg.norm(Zc), np.finfo(float).tiny)
        if change < step_tol:
            if tau <= tau_min and X_res <= delta:
                converged = True
                break
            # settled at this threshold: move down the path, restart momentum
            tau = max(tau * cfg.tau_decay, tau_min)
            Y, t = X, 1.0
            continue
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        Y = X + (t / t_next) * (Zc - X) + ((t - 1.0) / t_next) * (X - X_prev)
        t = t_next
    if not converged:
        log.info("NNM stopped after %d iterations, residual %.3g, delta %.3g", it, X_res, delta)
    # a fully unobserved row/column is not recoverable (filled with zeros)
    converged = converged and not has_empty_line(mask)
    return CompletionResult(X, converged, it, X_res, objective)


def complete_ialm(M_obs: np.ndarray, mask: Mask, cfg: SolverConfig | None = None) -> CompletionResult:
    """Inexact augmented Lagrangian completion, directly on complex data.

    Solves ``min ||Z||_*  s.t.  Z + E = P(M), P(E) = 0`` with
    ``Z <- shrink(D - E + Y/mu, 1/mu)``, ``E <- P_c(D - Z + Y/mu)``,
    ``Y <- Y + mu (D - Z - E)``, ``mu <- rho mu``. Stops once
    ``||D - Z - E||_F / ||D||_F < tol``.
    """
    cfg = cfg or SolverConfig()
    M_obs = np.asarray(M_obs)
    obs = mask.observed
    if M_obs.shape != obs.shape:
        raise ValueError("dimension mismatch between data and mask")
    if not obs.any():
        raise ValueError("mask has no observed entry")
    dtype = np.complex128 if np.iscomplexobj(M_obs) else np.float64
    D = np.where(obs, M_obs, 0).astype(dtype)
    nrm = _observed_norm(D)
    delta = cfg.delta if cfg.delta is not None else 1e-6 * nrm
    mu = cfg.mu0 if cfg.mu0 is not None else 1.0 / float(np.linalg.norm(D, 2))

    Y = np.zeros_like(D)
    E = np.zeros_like(D)
    Z = np.zeros_like(D)
    objective = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        Z, nuc = _shrink_with_norm(D - E + Y / mu, 1.0 / mu)
        E = np.where(obs, 0, D - Z + Y / mu)
        gap = D - Z - E
        Y = Y + mu * gap
        mu *= cfg.rho
        objective.append(nuc)
        if np.linalg.norm(gap) / nrm < cfg.tol:
            converged = True
            break
    residual = float(np.linalg.norm(np.where(obs, Z - D, 0)))
    if converged and residual > max(delta, cfg.tol * nrm):
        converged = False
    converged = converged and not has_empty_line(mask)
    return CompletionResult(Z, converged, it, residual, objective)


def scaled_config(cfg: SolverConfig, factor: float) -> SolverConfig:
    """Copy of ``cfg`` with the absolute thresholds rescaled by ``|factor|``."""
    a = abs(factor)
    return replace(cfg,
                   delta=None if cfg.delta is None else cfg.delta * a,
                   tau=None if cfg.tau is None else cfg.tau * a,
                   mu0=None if cfg.mu0 is None else cfg.mu0 / a)
