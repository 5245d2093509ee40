"""Stepped-frequency ISAR echo simulation and range-Doppler imaging.

Echo matrices are indexed ``Y[m, n]`` with ``m`` the aperture (angle) step and
``n`` the frequency step, both 0-based. A point scatterer on grid cell
``(p, q)`` contributes ``alpha * exp(-2j*pi*p*m/M) * exp(-2j*pi*q*n/N)``, so the
unnormalised forward 2-D DFT of the echo places ``M*N*alpha`` on pixel
``(p, q)``. Images are returned unshifted; use :func:`numpy.fft.fftshift` to
centre them for display.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

C0 = 2.99792458e8


@dataclass(frozen=True)
class RadarParams:
    f0: float
    delta_f: float
    n_freq: int
    n_angle: int
    delta_theta: float
    c: float = C0

    def __post_init__(self):
        if self.n_freq < 1 or self.n_angle < 1:
            raise ValueError("n_freq and n_angle must be >= 1")
        if not (self.delta_f > 0 and self.delta_theta > 0 and self.f0 > 0 and self.c > 0):
            raise ValueError("f0, delta_f, delta_theta and c must be positive")

    @property
    def range_resolution(self) -> float:
        """Range bin size c / (2 N delta_f) in metres."""
        return self.c / (2 * self.n_freq * self.delta_f)

    @property
    def cross_range_resolution(self) -> float:
        """Cross-range bin size c / (2 M delta_theta) in metres."""
        return self.c / (2 * self.n_angle * self.delta_theta)

    @property
    def frequencies(self) -> np.ndarray:
        return self.f0 + np.arange(self.n_freq) * self.delta_f

    @property
    def angles(self) -> np.ndarray:
        return np.arange(self.n_angle) * self.delta_theta


@dataclass(frozen=True)
class Scatterer:
    p: int  # cross-range cell
    q: int  # range cell
    alpha: complex = 1.0


@dataclass
class Scene:
    params: RadarParams
    scatterers: list[Scatterer] = field(default_factory=list)

    @property
    def shape(self) -> tuple[int, int]:
        return self.params.n_angle, self.params.n_freq

    def validate(self) -> None:
        M, N = self.shape
        for s in self.scatterers:
            if not (0 <= s.p < M and 0 <= s.q < N):
                raise ValueError(f"scatterer ({s.p}, {s.q}) outside {M}x{N} grid")
            if not np.isfinite(complex(s.alpha)):
                raise ValueError("scatterer reflectivity must be finite")


def default_params(n_angle: int = 64, n_freq: int = 64) -> RadarParams:
    """X-band stepped-frequency setup (9 GHz start, 2 MHz steps, 0.05 deg)."""
    return RadarParams(f0=9e9, delta_f=2e6, n_freq=n_freq, n_angle=n_angle,
                       delta_theta=np.deg2rad(0.05))


def random_scene(params: RadarParams, n_scatterers: int, seed: int,
                 extent: int | None = None) -> Scene:
    """Draw a scene of distinct scatterers with unit-magnitude random-phase
    reflectivities.

    With ``extent`` set, cells are drawn from the signed window
    ``[-extent, extent]`` around the origin (wrapped modulo the grid), which is
    where a motion-compensated target sits in the centred image. Without it the
    whole grid is used.
    """
    M, N = params.n_angle, params.n_freq
    rng = np.random.default_rng(seed)
    if extent is None:
        cells = rng.choice(M * N, size=n_scatterers, replace=False)
        pq = [(int(c // N), int(c % N)) for c in cells]
    else:
        side = 2 * extent + 1
        if side > min(M, N):
            raise ValueError("extent does not fit inside the grid")
        cells = rng.choice(side * side, size=n_scatterers, replace=False)
        pq = [(int(c // side) - extent, int(c % side) - extent) for c in cells]
        pq = [(p % M, q % N) for p, q in pq]
    phases = rng.uniform(0.0, 2 * np.pi, size=n_scatterers)
    scats = [Scatterer(p, q, complex(np.exp(1j * ph))) for (p, q), ph in zip(pq, phases)]
    return Scene(params, scats)


def simulate_echo(scene: Scene) -> np.ndarray:
    """Return the M x N complex echo matrix of ``scene``.

    Built as ``E_M^T A E_N`` where ``A`` accumulates reflectivities on the grid
    and ``E_K[k, j] = exp(-2j*pi*k*j/K)``; duplicate cells add.
    """
    scene.validate()
    M, N = scene.shape
    A = np.zeros((M, N), dtype=np.complex128)
    for s in scene.scatterers:
        A[s.p, s.q] += complex(s.alpha)
    if not A.any():
        return A
    rows = np.nonzero(A.any(axis=1))[0]
    cols = np.nonzero(A.any(axis=0))[0]
    m = np.arange(M)
    n = np.arange(N)
    # only occupied cells contribute; keeps K-sparse scenes cheap
    Em = np.exp(-2j * np.pi * np.outer(m, rows) / M)
    En = np.exp(-2j * np.pi * np.outer(cols, n) / N)
    return Em @ A[np.ix_(rows, cols)] @ En


def rd_image(echo: np.ndarray) -> np.ndarray:
    """Range-Doppler image: unnormalised 2-D DFT with the conjugate kernel.

    ``I[k, l] = sum_{m,n} Y[m, n] exp(+2j*pi*(k*m/M + l*n/N))``, the matched
    filter of :func:`simulate_echo`, so a lone scatterer at ``(p, q)`` lands at
    pixel ``(p, q)`` with value ``M*N*alpha``.
    """
    echo = np.asarray(echo)
    if echo.ndim != 2:
        raise ValueError("echo must be a 2-D matrix")
    if not np.all(np.isfinite(echo)):
        raise ValueError("echo contains non-finite values")
    return np.fft.ifft2(echo) * echo.size


def to_db_image(image: np.ndarray, top_db: float = 20.0) -> np.ndarray:
    """Magnitude in dB relative to the peak, clamped to ``[-top_db, 0]``."""
    if top_db <= 0:
        raise ValueError("top_db must be positive")
    mag = np.abs(np.asarray(image))
    peak = mag.max() if mag.size else 0.0
    if peak == 0:
        raise ValueError("empty image")
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag / peak)
    return np.clip(db, -top_db, 0.0)
