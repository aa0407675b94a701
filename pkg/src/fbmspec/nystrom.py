"""Nyström reference spectra of the covariance operators on [0, 1].

The operator matrix M from :mod:`fbmspec.operators` is symmetrized as
``D^{1/2} M D^{-1/2}`` (D the quadrature weights), so eigenvectors are
orthonormal in the weighted inner product once divided by ``sqrt(w)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import _backend
from .operators import (KernelFamily, KernelSpec, _power_cell_integrals, fbm_cov,
                        kappa_beta, kappa_singular_coefficient, operator_matrix)
from .quadrature import panel_rule
from .specfun import Family

__all__ = [
    "GridScheme",
    "Grid",
    "make_grid",
    "SymmetricSpectrum",
    "ResolutionError",
    "symmetric_eig",
    "reference_spectrum",
    "eigenfunction_at",
    "quadrature_trace",
    "galerkin_fbn_spectrum",
]


class ResolutionError(ValueError):
    """Requested more modes than the grid resolves."""


class GridScheme(str, enum.Enum):
    GAUSS_LEGENDRE = "gauss_legendre"
    MIDPOINT = "midpoint"
    GRADED = "graded"


@dataclass(frozen=True)
class Grid:
    nodes: np.ndarray
    weights: np.ndarray
    scheme: GridScheme
    edges: np.ndarray | None = None

    def __post_init__(self):
        if not np.isclose(self.weights.sum(), 1.0, rtol=1e-12, atol=0):
            raise ValueError("grid weights must sum to 1")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")

    @property
    def size(self) -> int:
        return self.nodes.size


_GL_ORDER = 8


def make_grid(N: int, scheme: GridScheme | str = GridScheme.GAUSS_LEGENDRE,
              grading: float = 0.9) -> Grid:
    """Grid with about N nodes on (0, 1).

    ``GAUSS_LEGENDRE`` uses order-8 panels (N rounded up to a multiple of 8);
    ``MIDPOINT`` uses N equal cells; ``GRADED`` uses cells shrinking
    geometrically by ``grading`` toward both endpoints.
    """
    scheme = GridScheme(scheme)
    if N < 2:
        raise ValueError("need at least two nodes")
    if scheme is GridScheme.GAUSS_LEGENDRE:
        m = -(-N // _GL_ORDER)
        t, w = panel_rule(np.linspace(0.0, 1.0, m + 1), _GL_ORDER)
        return Grid(t, w, scheme)
    if scheme is GridScheme.MIDPOINT:
        e = np.linspace(0.0, 1.0, N + 1)
    else:
        half = N // 2
        # cell sizes h r^k toward each end, normalized to cover [0, 1/2]
        sizes = grading ** np.arange(half)[::-1]
        left = np.concatenate(([0.0], np.cumsum(sizes) / sizes.sum() * 0.5))
        e = np.concatenate((left, 1.0 - left[-2::-1]))
    t = 0.5 * (e[:-1] + e[1:])
    w = np.diff(e)
    return Grid(t, w, scheme, e)


def default_scheme(k: KernelSpec) -> GridScheme:
    if k.family is KernelFamily.FBM_COV:
        return GridScheme.GAUSS_LEGENDRE
    return GridScheme.MIDPOINT


# ---------------------------------------------------------------------------
# eigensolvers


def symmetric_eig(A, method: str = "lapack", subset: tuple[int, int] | None = None):
    """Eigen-decomposition of a symmetric matrix, eigenvalues ascending.

    ``method='jacobi'`` runs cyclic Jacobi sweeps (compiled when available);
    ``'lapack'`` calls LAPACK's symmetric driver and honours ``subset``
    (inclusive index range in ascending order).
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    scale = np.max(np.abs(A)) or 1.0
    if np.max(np.abs(A - A.T)) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    if method == "jacobi":
        w, V, _ = _backend.jacobi_eigh(0.5 * (A + A.T))
        if subset is not None:
            w, V = w[subset[0]:subset[1] + 1], V[:, subset[0]:subset[1] + 1]
        return w, V
    if method == "lapack":
        if subset is None:
            return sla.eigh(A)
        return sla.eigh(A, subset_by_index=list(subset))
    raise ValueError(f"unknown eigensolver {method!r}")


# ---------------------------------------------------------------------------
# reference spectrum


@dataclass
class SymmetricSpectrum:
    """Leading eigenpairs of a discretized covariance operator."""

    kernel: KernelSpec
    grid: Grid
    eigenvalues: np.ndarray          # descending for compact operators, ascending if inverted
    vectors: np.ndarray              # eigenfunction values at the nodes, one column per mode
    n_reliable: int
    coarse_eigenvalues: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_max(self) -> int:
        return self.eigenvalues.size

    def eigenfunction(self, n: int) -> np.ndarray:
        if not 1 <= n <= self.n_max:
            raise IndexError(f"mode {n} outside 1..{self.n_max}")
        return self.vectors[:, n - 1]

    def gram(self) -> np.ndarray:
        w = self.grid.weights
        return self.vectors.T @ (w[:, None] * self.vectors)


def _solve_grid(k: KernelSpec, grid: Grid, n_max: int, method: str):
    M = operator_matrix(k, grid.nodes, grid.weights, grid.edges)
    sw = np.sqrt(grid.weights)
    A = sw[:, None] * M / sw[None, :]
    A = 0.5 * (A + A.T)
    N = grid.size
    lo = N - n_max
    mu, V = symmetric_eig(A, method, (lo, N - 1))
    mu, V = mu[::-1], V[:, ::-1]
    lam = 1.0 / mu if k.inverted else mu
    return lam, V / sw[:, None]


def _fix_signs(k: KernelSpec, grid: Grid, vecs: np.ndarray, reference: str):
    """Sign each eigenfunction deterministically (in place)."""
    from . import asymptotics  # local import: asymptotics depends on nystrom only in tests

    t = grid.nodes
    p = k.p
    use_asym = reference == "asymptotic" and 0.0 < p.H < 1.0 and not (
        p.family is Family.FBM and p.H == 0.5)
    for j in range(vecs.shape[1]):
        v = vecs[:, j]
        s = 0.0
        if use_asym:
            ref = (asymptotics.eigfun_fbm(j + 1, p.H, t) if p.family is Family.FBM
                   else asymptotics.eigfun_fbn(j + 1, p.H, t))
            s = float(grid.weights @ (ref * v))
        elif p.family is Family.FBM and p.H == 0.5 and reference == "asymptotic":
            s = float(grid.weights @ (np.sin((j + 0.5) * math.pi * t) * v))
        if s == 0.0:
            s = v[np.argmax(np.abs(v))]
        if s < 0.0:
            vecs[:, j] = -v


def reference_spectrum(k: KernelSpec, N: int, n_max: int, *,
                       scheme: GridScheme | str | None = None, method: str = "lapack",
                       check: bool = True, strict: bool = True,
                       sign_reference: str = "asymptotic") -> SymmetricSpectrum:
    """Leading ``n_max`` eigenpairs on an N-node grid.

    ``n_reliable`` is the largest n such that every eigenvalue up to n changes
    by less than 0.1% when the grid is halved. With ``strict`` a
    :class:`ResolutionError` is raised when ``n_max`` exceeds it.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if N < 8 * n_max:
        raise ResolutionError(f"N={N} is below the resolution gate 8*n_max={8 * n_max}")
    scheme = default_scheme(k) if scheme is None else GridScheme(scheme)
    grid = make_grid(N, scheme)
    lam, vecs = _solve_grid(k, grid, n_max, method)
    coarse = None
    n_rel = n_max
    if check:
        cgrid = make_grid(N // 2, scheme)
        coarse, _ = _solve_grid(k, cgrid, min(n_max, cgrid.size - 1), method)
        m = coarse.size
        rel = np.abs(lam[:m] - coarse) / np.abs(lam[:m])
        bad = np.nonzero(rel >= 1e-3)[0]
        n_rel = int(bad[0]) if bad.size else m
        if strict and n_rel < n_max:
            raise ResolutionError(
                f"only {n_rel} of {n_max} eigenvalues agree to 0.1% between N and N/2")
    _fix_signs(k, grid, vecs, sign_reference)
    return SymmetricSpectrum(k, grid, lam, vecs, n_rel, coarse)


def quadrature_trace(k: KernelSpec, N: int, scheme: GridScheme | str | None = None) -> float:
    """Trace of the plain quadrature matrix w_j R(t_i, t_j), i.e. sum_i w_i R(t_i, t_i)."""
    if k.family is not KernelFamily.FBM_COV:
        raise ValueError("the trace identity applies to the fBm covariance")
    grid = make_grid(N, default_scheme(k) if scheme is None else scheme)
    return float(grid.weights @ fbm_cov(grid.nodes, grid.nodes, k.p))


# ---------------------------------------------------------------------------
# natural interpolation


def eigenfunction_at(spec: SymmetricSpectrum, n: int, x):
    """Nyström interpolation of the n-th eigenfunction; reproduces node values."""
    if not 1 <= n <= spec.n_max:
        raise IndexError(f"mode {n} outside 1..{spec.n_max}")
    if n > spec.n_reliable:
        raise ResolutionError(f"mode {n} beyond n_reliable={spec.n_reliable}")
    x_in = np.asarray(x, dtype=float)
    xs = np.atleast_1d(x_in)
    if np.any((xs < 0.0) | (xs > 1.0)):
        raise ValueError("x must lie in [0, 1]")
    k, g = spec.kernel, spec.grid
    phi = spec.eigenfunction(n)
    lam = spec.eigenvalues[n - 1]
    t, w = g.nodes, g.weights
    if k.family is KernelFamily.FBM_COV:
        h2 = 2.0 * k.p.H
        D = np.abs(xs[:, None] - t[None, :]) ** h2
        corr = 0.5 * ((xs ** (h2 + 1.0) + (1.0 - xs) ** (h2 + 1.0)) / (h2 + 1.0) - D @ w)
        val = (fbm_cov(xs[:, None], t[None, :], k.p) @ (w * phi)) / (lam + corr)
    elif k.family is KernelFamily.FBN_DIRECT:
        e = 2.0 * k.p.H - 1.0
        P = k.p.H * e * _power_cell_integrals(xs, g.edges, e)
        val = (P @ phi) / lam
    else:
        a = k.p.alpha
        from .operators import _kappa_inner_rule

        wn, ww = _kappa_inner_rule()
        B = kappa_singular_coefficient(a)
        X = np.repeat(xs, t.size)
        T = np.tile(t, xs.size)
        d = np.abs(X - T)
        safe = d > 0
        K = np.zeros(X.shape)
        K[safe] = _backend.kappa_pairs(X[safe], T[safe], a, kappa_beta(a), wn, ww)
        R = np.where(safe, K - B * np.where(safe, d, 1.0) ** (a - 2.0), 0.0).reshape(xs.size, t.size)
        P = B * _power_cell_integrals(xs, g.edges, a - 1.0)
        val = lam * ((R * w[None, :] + P) @ phi)
    # snap exact node hits to the stored values
    idx = np.searchsorted(t, xs)
    for i, (xi, j) in enumerate(zip(xs, idx)):
        for jj in (j - 1, j):
            if 0 <= jj < t.size and abs(t[jj] - xi) <= 1e-14:
                val[i] = phi[jj]
    return val if x_in.ndim else float(val[0])


# ---------------------------------------------------------------------------
# independent oracle for the fBn operator


def galerkin_fbn_spectrum(H: float, N: int, n_max: int) -> np.ndarray:
    """Eigenvalues of the fBn operator by piecewise-constant Galerkin on N cells.

    The Galerkin matrix is the covariance of fBm increments over the cells,
    valid for every H in (0, 1); it needs no kernel singularity handling.
    """
    h = 1.0 / N
    k = np.arange(N, dtype=float)
    h2 = 2.0 * H
    g = 0.5 * h ** h2 * (np.abs(k + 1) ** h2 + np.abs(k - 1) ** h2 - 2.0 * k ** h2) / h
    T = sla.toeplitz(g)
    if H > 0.5:
        mu = sla.eigh(T, eigvals_only=True, subset_by_index=[N - n_max, N - 1])
        return mu[::-1]
    return sla.eigh(T, eigvals_only=True, subset_by_index=[0, n_max - 1])
