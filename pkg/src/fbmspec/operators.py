"""Kernels of the fBm covariance operator, the fBn operator and its inverse.

Three kernel families live here:

* ``FBM_COV``: R(s, t) = (t^{2H} + s^{2H} - |t - s|^{2H}) / 2,
* ``FBN_DIRECT``: H(2H - 1)|s - t|^{2H-2}, weakly singular, H > 1/2,
* ``FBN_INVERSE``: the kernel kappa of the inverse of the fBn operator, H < 1/2.

``operator_matrix`` returns the matrix M with (Af)(t_i) ~ sum_j M_ij f(t_j) for a
given grid. Singular or non-smooth parts are integrated exactly per cell.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import beta as _beta_fn

from . import _backend
from .quadrature import geometric_breaks, panel_rule
from .specfun import Family, HurstParams

__all__ = [
    "KernelFamily",
    "KernelSpec",
    "GridFunction",
    "fbm_cov",
    "fbn_kernel",
    "inverse_kernel_kappa",
    "kappa_beta",
    "kappa_singular_coefficient",
    "kappa_row_bound",
    "operator_matrix",
    "apply_operator",
]


class KernelFamily(str, enum.Enum):
    FBM_COV = "fbm_cov"
    FBN_DIRECT = "fbn_direct"
    FBN_INVERSE = "fbn_inverse"


def kappa_beta(alpha: float) -> float:
    """Normalizing constant beta_alpha of the inverse kernel (alpha in (1, 2))."""
    if not 1.0 < alpha < 2.0:
        raise ValueError("the inverse kernel needs alpha in (1, 2), i.e. H < 1/2")
    return (math.sin((alpha - 1.0) * math.pi / 2.0) / math.pi / (2.0 - alpha)
            / _beta_fn((alpha + 1.0) / 2.0, (alpha - 1.0) / 2.0))


def kappa_singular_coefficient(alpha: float) -> float:
    """B with kappa(u, v) ~ B |u - v|^{alpha - 2} as v -> u."""
    return kappa_beta(alpha) * _beta_fn((alpha - 1.0) / 2.0, 2.0 - alpha)


def kappa_row_bound(alpha: float) -> float:
    """Upper bound on sup_v int_0^1 kappa(u, v) du."""
    return (math.sin((alpha - 1.0) * math.pi / 2.0) / math.pi * 2.0 ** (2.0 - alpha)
            / ((alpha - 1.0) * (2.0 - alpha)))


@dataclass(frozen=True)
class KernelSpec:
    family: KernelFamily
    p: HurstParams

    def __post_init__(self):
        fam = KernelFamily(self.family)
        object.__setattr__(self, "family", fam)
        H = self.p.H
        if fam is KernelFamily.FBN_DIRECT and not H > 0.5:
            raise ValueError("the direct noise kernel needs H > 1/2")
        if fam is KernelFamily.FBN_INVERSE and not H < 0.5:
            raise ValueError("the inverse noise kernel needs H < 1/2")

    @property
    def kappa_beta(self) -> float | None:
        if self.family is KernelFamily.FBN_INVERSE:
            return kappa_beta(self.p.alpha)
        return None

    @property
    def inverted(self) -> bool:
        """True when the matrix discretizes the inverse of the covariance operator."""
        return self.family is KernelFamily.FBN_INVERSE

    @classmethod
    def for_model(cls, model: str, H: float) -> "KernelSpec":
        """Natural kernel for ``model`` in {'fbm', 'fbn'} at Hurst exponent H."""
        fam = Family(model)
        if fam is Family.FBM:
            return cls(KernelFamily.FBM_COV, HurstParams(H, Family.FBM))
        p = HurstParams(H, Family.FBN)
        return cls(KernelFamily.FBN_DIRECT if H > 0.5 else KernelFamily.FBN_INVERSE, p)


@dataclass(frozen=True)
class GridFunction:
    """Values of a function at quadrature nodes; ``edges`` present for cell grids."""

    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    edges: np.ndarray | None = None

    def __post_init__(self):
        n = np.asarray(self.nodes, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        v = np.asarray(self.values)
        if n.shape != w.shape or n.shape != v.shape[:1]:
            raise ValueError("nodes, weights and values must have matching length")
        object.__setattr__(self, "nodes", n)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "values", v)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.nodes, self.weights, np.asarray(values), self.edges)

    def integral(self):
        return self.weights @ self.values

    def inner(self, other: "GridFunction"):
        return self.weights @ (self.values * other.values)

    def norm(self) -> float:
        return float(math.sqrt(abs(self.inner(self))))


# ---------------------------------------------------------------------------
# point kernels


def fbm_cov(s, t, p: HurstParams):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    h2 = 2.0 * p.H
    return 0.5 * (t ** h2 + s ** h2 - np.abs(t - s) ** h2)


def fbn_kernel(s, t, p: HurstParams):
    if not p.H > 0.5:
        raise ValueError("the direct noise kernel needs H > 1/2")
    d = np.abs(np.asarray(s, dtype=float) - np.asarray(t, dtype=float))
    if np.any(d == 0.0):
        raise ZeroDivisionError("noise kernel is singular on the diagonal; use cell integrals")
    return p.H * (2.0 * p.H - 1.0) * d ** (2.0 * p.H - 2.0)


@lru_cache(maxsize=4)
def _kappa_inner_rule(order: int = 12, smallest: float = 1e-12):
    br = geometric_breaks(0.0, 1.0, "left", 0.5, smallest)
    return panel_rule(br, order)


def inverse_kernel_kappa(u, v, p: HurstParams):
    """kappa(u, v) by Gauss-Legendre after r = max(u, v) + w^{2/(alpha-1)}."""
    a = p.alpha
    if not a > 1.0:
        raise ValueError("the inverse kernel needs H < 1/2")
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    if np.any((u <= 0) | (u >= 1) | (v <= 0) | (v >= 1)):
        raise ValueError("kappa is evaluated on the open square (0, 1)^2")
    if np.any(u == v):
        raise ZeroDivisionError("kappa is singular on the diagonal; use cell integrals")
    wn, ww = _kappa_inner_rule()
    return _backend.kappa_pairs(u.ravel(), v.ravel(), a, kappa_beta(a), wn, ww).reshape(u.shape)


# ---------------------------------------------------------------------------
# discretized operators


def _power_cell_integrals(t, edges, e):
    """int over cell j of |t_i - s|^{e-1} ds, exactly; e > 0."""
    lo = t[:, None] - edges[None, :-1]
    hi = t[:, None] - edges[None, 1:]
    return (np.sign(lo) * np.abs(lo) ** e - np.sign(hi) * np.abs(hi) ** e) / e


def _fbm_matrix(p, t, w):
    h2 = 2.0 * p.H
    D = np.abs(t[:, None] - t[None, :]) ** h2
    M = 0.5 * (t[:, None] ** h2 + t[None, :] ** h2 - D) * w[None, :]
    # |t - s|^{2H} has a kink at s = t: replace its quadrature by the exact integral
    exact = (t ** (h2 + 1.0) + (1.0 - t) ** (h2 + 1.0)) / (h2 + 1.0)
    M[np.diag_indices_from(M)] -= 0.5 * (exact - D @ w)
    return M


def _fbn_direct_matrix(p, t, edges):
    e = 2.0 * p.H - 1.0
    return p.H * e * _power_cell_integrals(t, edges, e)


def _kappa_matrix(p, t, w, edges):
    a = p.alpha
    N = t.size
    # inner grading only needs to resolve the smallest off-diagonal separation
    q = 2.0 / (a - 1.0)
    dmin = float(np.min(np.diff(t))) if N > 1 else 1.0
    wn, ww = _kappa_inner_rule(12, float(np.clip(1e-2 * dmin ** (1.0 / q), 1e-14, 1e-2)))
    K = _backend.kappa_matrix(t, a, kappa_beta(a), wn, ww)
    B = kappa_singular_coefficient(a)
    off = ~np.eye(N, dtype=bool)
    R = np.zeros((N, N))
    d = np.abs(t[:, None] - t[None, :])
    R[off] = K[off] - B * d[off] ** (a - 2.0)
    # the regular remainder is continuous: fill its diagonal from the neighbours
    diag = np.empty(N)
    diag[1:-1] = 0.5 * (R[np.arange(1, N - 1), np.arange(0, N - 2)]
                        + R[np.arange(1, N - 1), np.arange(2, N)])
    diag[0] = R[0, 1]
    diag[-1] = R[-1, -2]
    R[np.diag_indices(N)] = diag
    return R * w[None, :] + B * _power_cell_integrals(t, edges, a - 1.0)


def operator_matrix(k: KernelSpec, nodes, weights, edges=None) -> np.ndarray:
    """Matrix of the discretized operator; cell grids need ``edges``."""
    t = np.asarray(nodes, dtype=float)
    w = np.asarray(weights, dtype=float)
    if k.family is KernelFamily.FBM_COV:
        return _fbm_matrix(k.p, t, w)
    if edges is None:
        raise ValueError("noise kernels need a cell grid (edges) for product integration")
    edges = np.asarray(edges, dtype=float)
    if edges.size != t.size + 1:
        raise ValueError("edges must have one more entry than nodes")
    if k.family is KernelFamily.FBN_DIRECT:
        return _fbn_direct_matrix(k.p, t, edges)
    return _kappa_matrix(k.p, t, w, edges)


def apply_operator(f: GridFunction, k: KernelSpec, at=None):
    """Apply the operator of ``k`` to ``f``.

    Returns a GridFunction on the grid of ``f``; with ``at`` the plain quadrature
    sum sum_j w_j k(x, t_j) f_j is evaluated at the points ``at`` instead
    (fBm covariance only, where the kernel is continuous).
    """
    if at is not None:
        if k.family is not KernelFamily.FBM_COV:
            raise ValueError("off-grid evaluation is only supported for the fBm kernel")
        x = np.atleast_1d(np.asarray(at, dtype=float))
        vals = fbm_cov(x[:, None], f.nodes[None, :], k.p) @ (f.weights * f.values)
        return vals if np.ndim(at) else float(vals[0])
    if not np.isclose(f.weights.sum(), 1.0, rtol=1e-10, atol=0):
        raise ValueError("grid weights must sum to 1 on [0, 1]")
    M = operator_matrix(k, f.nodes, f.weights, f.edges)
    return f.with_values(M @ f.values)
