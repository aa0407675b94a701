"""Karhunen-Loeve sampling of fBm paths from the computed spectrum.

X(t) = sum_n sqrt(lambda_n) xi_n phi_n(t). Modes up to the reliable Nyström
range come from the discretized operator, later ones from the asymptotic
formulas.

Normals are generated reproducibly: path i draws raw 64-bit words from a
Philox-4x64 counter generator keyed by (seed, i); each word w becomes the
uniform (w >> 11) * 2^-53 in [0, 1), and pairs (u1, u2) map to
sqrt(-2 log(1 - u1)) * (cos 2 pi u2, sin 2 pi u2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .asymptotics import Order, eigfun_fbm, lambda_fbm
from .nystrom import ResolutionError, eigenfunction_at, reference_spectrum
from .operators import KernelSpec, fbm_cov

__all__ = ["PathSample", "CovarianceReport", "box_muller_normals", "mode_table",
           "kl_sample", "empirical_cov_check"]


def _uniforms(seed: int, index: int, m: int) -> np.ndarray:
    bg = np.random.Philox(key=np.array([seed, index], dtype=np.uint64))
    raw = bg.random_raw(m)
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def box_muller_normals(seed: int, index: int, m: int) -> np.ndarray:
    """m standard normals for stream ``index`` under ``seed``."""
    if seed < 0 or index < 0:
        raise ValueError("seed and stream index must be nonnegative")
    k = (m + 1) // 2
    u = _uniforms(seed, index, 2 * k)
    r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
    a = 2.0 * math.pi * u[1::2]
    z = np.empty(2 * k)
    z[0::2] = r * np.cos(a)
    z[1::2] = r * np.sin(a)
    return z[:m]


@lru_cache(maxsize=8)
def _nystrom_fbm(H: float, N: int, n_max: int):
    return reference_spectrum(KernelSpec.for_model("fbm", H), N, n_max, strict=False)


def mode_table(H: float, n_modes: int, grid, N: int = 2000):
    """Eigenvalues, eigenfunction values on ``grid`` and the Nyström/asymptotic boundary."""
    if not 0.0 < H < 1.0:
        raise ValueError("H must lie in (0, 1)")
    if n_modes < 1:
        raise ValueError("need at least one mode")
    t = np.asarray(grid, dtype=float)
    spec = _nystrom_fbm(H, N, min(n_modes, N // 8))
    n_nys = min(spec.n_reliable, n_modes)
    lam = np.empty(n_modes)
    phi = np.empty((t.size, n_modes))
    for n in range(1, n_modes + 1):
        if n <= n_nys:
            lam[n - 1] = spec.eigenvalues[n - 1]
            phi[:, n - 1] = eigenfunction_at(spec, n, t)
        else:
            lam[n - 1] = lambda_fbm(n, H, Order.SECOND)
            phi[:, n - 1] = eigfun_fbm(n, H, t)
    phi[t == 0.0, :] = 0.0  # every path starts at the origin
    return lam, phi, n_nys


@dataclass(frozen=True)
class PathSample:
    H: float
    grid: np.ndarray
    paths: np.ndarray
    n_modes: int
    n_nystrom: int
    seed: int
    eigenvalues: np.ndarray

    @property
    def count(self) -> int:
        return self.paths.shape[0]


def kl_sample(H: float, n_modes: int, grid, count: int, seed: int, *,
              N: int = 2000) -> PathSample:
    """``count`` fBm paths on ``grid`` from the first ``n_modes`` KL terms."""
    if count < 1:
        raise ValueError("count must be at least 1")
    if n_modes > 10 * N:
        raise ResolutionError("too many modes for the requested spectrum")
    t = np.asarray(grid, dtype=float)
    if t.ndim != 1 or np.any((t < 0.0) | (t > 1.0)):
        raise ValueError("grid must be a 1-d array in [0, 1]")
    lam, phi, n_nys = mode_table(H, n_modes, t, N)
    xi = np.stack([box_muller_normals(seed, i, n_modes) for i in range(count)])
    paths = (xi * np.sqrt(lam)[None, :]) @ phi.T
    return PathSample(H, t, paths, n_modes, n_nys, seed, lam)


@dataclass(frozen=True)
class CovarianceReport:
    count: int
    sufficient: bool
    points: np.ndarray
    max_z: float
    z: np.ndarray
    variance_max_z: float


def empirical_cov_check(sample: PathSample, points=None) -> CovarianceReport:
    """Standardized deviations of the empirical covariance from the fBm covariance.

    The standard error of the mean of X_s X_t is sqrt((R_ss R_tt + R_st^2)/count).
    ``points`` default to the five grid points nearest 0.2, 0.4, ..., 1.0.
    The variance function is checked separately at ten grid points.
    """
    t = sample.grid
    m = sample.count
    if points is None:
        points = np.linspace(0.2, 1.0, 5)
    idx = np.unique([int(np.argmin(np.abs(t - p))) for p in np.atleast_1d(points)])
    if m < 1000:
        nan = float("nan")
        return CovarianceReport(m, False, t[idx], nan, np.full((idx.size, idx.size), nan), nan)
    X = sample.paths[:, idx]
    emp = X.T @ X / m
    s = t[idx]
    R = fbm_cov(s[:, None], s[None, :], _params(sample.H))
    se = np.sqrt((np.outer(np.diag(R), np.diag(R)) + R ** 2) / m)
    z = (emp - R) / se
    vi = np.unique(np.linspace(0, t.size - 1, 11).astype(int)[1:])
    v = np.mean(sample.paths[:, vi] ** 2, axis=0)
    tv = t[vi] ** (2.0 * sample.H)
    vz = np.abs(v - tv) / np.sqrt(2.0 * tv ** 2 / m)
    return CovarianceReport(m, True, s, float(np.max(np.abs(z))), z, float(np.max(vz)))


def _params(H):
    return KernelSpec.for_model("fbm", H).p
