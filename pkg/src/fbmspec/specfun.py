"""Special functions and the auxiliary functions theta0, gamma0, h0, rho0, X0.

Two operator families share the machinery:

* ``Family.FBM``: covariance operator of fractional Brownian motion,
* ``Family.FBN``: covariance operator of fractional Brownian noise.

All half-line integrals are folded onto (0, 1) with the reflection identity
``theta0(u) + theta0(1/u) = const`` so that no tails need to be truncated.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gammaincc

from .quadrature import geometric_breaks, half_line_rule, panel_rule

__all__ = [
    "Family",
    "HurstParams",
    "AuxFunctionTable",
    "gamma_fn",
    "ell_H",
    "b_alpha",
    "theta0",
    "theta0_prime",
    "gamma0",
    "h0",
    "h0_direct",
    "X0_eval",
    "X0_boundary",
    "rho0",
    "aux_table",
    "X0_closed_form",
    "h0_interpolant",
    "layer_rule",
    "layer_transform",
]


class Family(str, enum.Enum):
    FBM = "fbm"
    FBN = "fbn"


@dataclass(frozen=True)
class HurstParams:
    """Hurst exponent together with the derived constants used everywhere."""

    H: float
    family: Family = Family.FBM
    alpha: float = field(init=False)
    c_alpha: float = field(init=False)
    C_alpha: float = field(init=False)

    def __post_init__(self):
        H = float(self.H)
        if not (0.0 < H <= 1.0):
            raise ValueError(f"Hurst exponent must lie in (0, 1], got {H}")
        fam = Family(self.family)
        if fam is Family.FBN and (H == 0.5 or H == 1.0):
            raise ValueError("the noise family needs H in (0, 1) with H != 1/2")
        alpha = 2.0 - 2.0 * H
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "c_alpha", (1.0 - alpha / 2.0) * (1.0 - alpha))
        object.__setattr__(self, "C_alpha", 1.0 - alpha / 2.0)

    # limits of theta0 and the reflection constant theta0(u) + theta0(1/u)
    @property
    def theta_zero(self) -> float:
        if self.family is Family.FBM or self.alpha < 1.0:
            return (1.0 - self.alpha) * math.pi / 2.0
        return 0.0

    @property
    def theta_inf(self) -> float:
        if self.family is Family.FBM:
            return 0.0
        if self.alpha > 1.0:
            return (3.0 - self.alpha) * math.pi / 2.0
        return math.pi

    @property
    def theta_sum(self) -> float:
        if self.family is Family.FBM:
            return (1.0 - self.alpha) * math.pi / 2.0
        return (3.0 - self.alpha) * math.pi / 2.0


# Lanczos approximation, g = 7, nine terms
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_fn(x: float) -> float:
    """Gamma function for x > 0 via the Lanczos series with reflection below 1/2."""
    x = float(x)
    if not x > 0.0:
        raise ValueError(f"gamma_fn is defined here for x > 0 only, got {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    x -= 1.0
    acc = _LANCZOS[0]
    for k in range(1, 9):
        acc += _LANCZOS[k] / (x + k)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (x + 0.5) * math.exp(-t) * acc


def ell_H(H: float) -> float:
    if not 0.0 < H < 1.0:
        raise ValueError("ell_H needs 0 < H < 1")
    return math.sin(0.5 * math.pi * (H - 0.5) / (H + 0.5)) / math.sin(0.5 * math.pi / (H + 0.5))


def b_alpha(alpha: float) -> float:
    if not 0.0 < alpha < 2.0:
        raise ValueError("b_alpha needs 0 < alpha < 2")
    w = math.pi / (3.0 - alpha)
    return math.sin(w * (1.0 - alpha) / 2.0) / math.sin(w)


def _check_positive(u):
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0):
        raise ValueError("auxiliary functions are defined for u > 0")
    return u


def _raw_theta(u, p: HurstParams):
    c, s = math.cos(math.pi * p.H), math.sin(math.pi * p.H)
    if p.family is Family.FBM:
        return np.arctan2(-c, u ** (2.0 * p.H + 1.0) + s)
    # arg of the Wiener-Hopf symbol; for H > 1/2 shifted by pi so it stays in (0, pi)
    sig = 1.0 if c > 0.0 else -1.0
    return np.arctan2(sig * c, sig * (u ** (2.0 * p.H - 1.0) - s))


def theta0(u, p: HurstParams):
    """Phase of the Wiener-Hopf symbol on the positive half-line (continuous branch)."""
    return _raw_theta(_check_positive(u), p)


def theta0_prime(u, p: HurstParams):
    u = _check_positive(u)
    c, s = math.cos(math.pi * p.H), math.sin(math.pi * p.H)
    if p.family is Family.FBM:
        m = 2.0 * p.H + 1.0
        um = u ** m
        return c * m * um / u / ((um + s) ** 2 + c * c)
    k = 2.0 * p.H - 1.0
    uk = u ** k
    return -c * k * uk / u / ((uk - s) ** 2 + c * c)


def gamma0(u, p: HurstParams):
    u = _check_positive(u)
    c, s = math.cos(math.pi * p.H), math.sin(math.pi * p.H)
    if p.family is Family.FBM:
        v = u ** (-2.0 * p.H)
        return np.hypot(u + v * s, v * c)
    v = u ** (1.0 - 2.0 * p.H)
    return np.hypot(1.0 - v * s, v * c)


# ---------------------------------------------------------------------------
# Cauchy transform X0


@dataclass(frozen=True)
class _FoldRule:
    nodes: np.ndarray
    weights: np.ndarray
    eps: float


def _fold_rule(order: int = 16) -> _FoldRule:
    eps = 1e-40
    br = geometric_breaks(0.0, 1.0, "left", 0.5, eps)
    br[0] = eps
    x, w = panel_rule(br, order)
    return _FoldRule(x, w, eps)


_FOLD = _fold_rule()


def _power_head(f_eps, f_half, eps):
    """Integral over (0, eps) of a pure power law matched at eps and eps/2."""
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = np.log(np.abs(f_eps / f_half)) / math.log(2.0)
        val = f_eps * eps / (beta + 1.0)
    return np.where(np.isfinite(val) & (f_eps != 0.0), val, 0.0)


def _log_X0(z, p: HurstParams):
    """log X0(z) for complex z off [0, inf)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    t, w, eps = _FOLD.nodes, _FOLD.weights, _FOLD.eps
    th = _raw_theta(t, p)
    tinf, tsum = p.theta_inf, p.theta_sum
    f1 = th - tinf                      # over (0, 1) directly
    f2 = (tsum - tinf - th) / t         # folded image of (1, inf), without the 1/(1 - z s) factor
    zc = z[:, None]
    i1 = (f1 / (t - zc)) @ w
    i2 = (f2 / (1.0 - zc * t)) @ w
    # heads on (0, eps): 1/(t - z) ~ -1/z and 1/(1 - z t) ~ 1 there
    th_e = _raw_theta(np.array([eps, eps / 2]), p)
    g = (tsum - tinf - th_e) / np.array([eps, eps / 2])
    head2 = _power_head(g[0], g[1], eps)
    head1 = (th_e[0] - tinf) * eps
    i1 = i1 - head1 / z
    i2 = i2 + head2
    out = (i1 + i2) / math.pi
    if tinf != 0.0:
        out = out - (tinf / math.pi) * np.log(-z)
    return out


def X0_eval(z, p: HurstParams):
    """Sectionally holomorphic X0 off the cut [0, inf); vectorized over z."""
    z = np.asarray(z, dtype=complex)
    zz = np.atleast_1d(z)
    on_cut = (np.abs(zz.imag) <= 1e-300) & (zz.real >= 0.0)
    if np.any(on_cut):
        raise ValueError("X0 is not defined on the cut [0, inf)")
    val = np.exp(_log_X0(zz, p))
    return val.reshape(z.shape) if z.shape else complex(val[0])


def X0_closed_form(p: HurstParams) -> complex:
    """Closed form of X0(i) for both families."""
    a = p.alpha
    if p.family is Family.FBM:
        return math.sqrt((3.0 - a) / 2.0) * np.exp(1j * (1.0 - a) * math.pi / 8.0)
    return math.sqrt(abs(a - 1.0) / 2.0) * np.exp(1j * (3.0 - a) * math.pi / 8.0)


# ---------------------------------------------------------------------------
# h0 and rho0


def _deep_left(a: float, b: float, deep: float = 1e-30, order: int = 16):
    """Panel rule on (a, b) graded geometrically toward a, first break at a + deep*(b-a)."""
    br = geometric_breaks(0.0, 1.0, "left", 0.5, deep)
    br[0] = deep
    x, w = panel_rule(br, order)
    return a + (b - a) * x, (b - a) * w


def _sigma_rule():
    """Nodes sigma and weights times log|(1+sigma)/(1-sigma)| for s = u*sigma."""
    x0, w0 = _deep_left(0.0, 0.5)                 # sigma in (0, 1/2)
    d1, w1 = _deep_left(0.0, 0.5)                 # sigma = 1 - d
    e2, w2 = _deep_left(0.0, 1.0)                 # sigma = 1 + e
    x3, w3 = panel_rule(np.geomspace(2.0, 1e18, 60))
    sig = np.concatenate((x0, 1.0 - d1, 1.0 + e2, x3))
    lk = np.concatenate((
        w0 * (np.log1p(x0) - np.log1p(-x0)),
        w1 * np.log((2.0 - d1) / d1),
        w2 * np.log((2.0 + e2) / e2),
        w3 * (np.log1p(x3) - np.log(x3 - 1.0)),
    ))
    return sig, lk


_SIGMA = _sigma_rule()


def _h0_exponent(u, p: HurstParams, chunk: int = 256):
    u = np.atleast_1d(_check_positive(u))
    sg, lk = _SIGMA
    out = np.empty(u.shape)
    flat = u.ravel()
    res = out.ravel()
    for a in range(0, flat.size, chunk):
        uu = flat[a:a + chunk, None]
        res[a:a + chunk] = (theta0_prime(uu * sg, p) * uu) @ lk
    return out / math.pi


def h0(u, p: HurstParams):
    """h0(u) = exp(-(1/pi) int theta0'(s) log|(u+s)/(u-s)| ds) * sin theta0(u)."""
    u_arr = np.asarray(u, dtype=float)
    e = _h0_exponent(u_arr, p)
    val = np.exp(-e) * np.sin(_raw_theta(np.atleast_1d(u_arr), p))
    return val.reshape(u_arr.shape) if u_arr.shape else float(val[0])


def X0_boundary(u, p: HurstParams):
    """Upper boundary value X0^+(u) on the cut, via a principal-value integral."""
    u = np.atleast_1d(_check_positive(u)).astype(float)
    tinf, tsum = p.theta_inf, p.theta_sum
    out = np.empty(u.shape, dtype=complex)
    for k, uk in enumerate(u):
        # (0, 2u) by subtraction: the PV of 1/(t-u) over (0, 2u) vanishes
        t0, w0 = _deep_left(0.0, 0.5 * uk)
        d1, w1 = _deep_left(0.0, 0.5 * uk)
        d2, w2 = _deep_left(0.0, uk)
        th_u = float(_raw_theta(np.array([uk]), p)[0])
        # offsets d from u are exact, so the difference quotient keeps its digits
        pv = np.sum(w0 * (_raw_theta(t0, p) - th_u) / (t0 - uk))
        pv -= np.sum(w1 * (_raw_theta(uk - d1, p) - th_u) / d1)
        pv += np.sum(w2 * (_raw_theta(uk + d2, p) - th_u) / d2)
        # (2u, inf) folded with t = 1/s onto (0, 1/(2u))
        bs = geometric_breaks(0.0, 0.5 / uk, "left", 0.5, 1e-40)
        bs[0] = 1e-40 * 0.5 / uk
        s, ws = panel_rule(bs)
        pv += np.sum(ws * (tsum - tinf - _raw_theta(s, p)) / (s * (1.0 - uk * s)))
        out[k] = np.exp(pv / math.pi - (tinf / math.pi) * math.log(uk) + 1j * th_u)
    return out


def h0_direct(u, p: HurstParams):
    """h0 as exp(i theta0) sin(theta0) X0(-u) / X0^+(u); real up to round-off."""
    u = np.atleast_1d(_check_positive(u)).astype(float)
    th = _raw_theta(u, p)
    return np.exp(1j * th) * np.sin(th) * X0_eval(-u + 0j, p) / X0_boundary(u, p)


def rho0(u, p: HurstParams):
    """Boundary-layer density sin(theta0)/gamma0 * X0(-u)."""
    u_arr = np.asarray(u, dtype=float)
    uu = np.atleast_1d(_check_positive(u_arr))
    val = np.sin(_raw_theta(uu, p)) / gamma0(uu, p) * np.exp(_log_X0(-uu + 0j, p).real)
    return val.reshape(u_arr.shape) if u_arr.shape else float(val[0])


@dataclass(frozen=True)
class AuxFunctionTable:
    family: Family
    H: float
    grid: np.ndarray
    theta0: np.ndarray
    gamma0: np.ndarray
    h0: np.ndarray
    rho0: np.ndarray
    theta0_inf: float


def aux_table(p: HurstParams, grid) -> AuxFunctionTable:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0) or grid[0] <= 0:
        raise ValueError("grid must be strictly increasing and positive")
    return AuxFunctionTable(p.family, p.H, grid, theta0(grid, p), gamma0(grid, p),
                            h0(grid, p), rho0(grid, p), p.theta_inf)


# ---------------------------------------------------------------------------
# cached tables shared by the asymptotic formulas and the fixed-point solver


@lru_cache(maxsize=64)
def h0_interpolant(p: HurstParams, lo: float = 1e-20, hi: float = 1e8, per_decade: int = 160):
    """Cubic spline of h0 in log u; constant continuation below ``lo``."""
    lu = np.linspace(math.log(lo), math.log(hi), int(per_decade * math.log10(hi / lo)) + 1)
    spl = CubicSpline(lu, h0(np.exp(lu), p))
    head = float(spl(lu[0]))

    def f(u):
        u = np.asarray(u, dtype=float)
        out = np.full(u.shape, head)
        m = u > lo
        out[m] = spl(np.log(u[m]))
        return out

    return f


@dataclass(frozen=True)
class LayerRule:
    """Half-line rule carrying rho0 in its weights plus a power-law tail beyond ``upper``."""

    nodes: np.ndarray
    weights: np.ndarray      # quadrature weight times rho0
    upper: float
    tail_coef: float         # rho0(u) ~ tail_coef * u**(-tail_exp) for u > upper
    tail_exp: float


@lru_cache(maxsize=64)
def layer_rule(p: HurstParams, lo: float = 1e-14, hi: float = 1e14) -> LayerRule:
    u, w = half_line_rule(16, lo, hi)
    r = rho0(u, p)
    ends = rho0(np.array([hi / 2.0, hi]), p)
    if ends[1] == 0.0:
        return LayerRule(u, w * r, hi, 0.0, 2.0)
    beta = math.log(ends[0] / ends[1]) / math.log(2.0)
    return LayerRule(u, w * r, hi, ends[1] * hi ** beta, beta)


def _upper_gamma(s: float, y):
    """Upper incomplete gamma for any real s and y > 0, via downward recursion."""
    y = np.asarray(y, dtype=float)
    k = 0
    while s + k <= 0.0:
        k += 1
    top = s + k
    val = gammaincc(top, y) * math.gamma(top)
    for j in range(k - 1, -1, -1):
        sj = s + j
        val = (val - y ** sj * np.exp(-y)) / sj
    return val


def layer_transform(p: HurstParams, a, moment: int = 0) -> np.ndarray:
    """int_0^inf u^moment rho0(u) exp(-a u) du for a >= 0 (vectorized), moment in {0, 1}."""
    lr = layer_rule(p)
    a = np.asarray(a, dtype=float)
    flat = a.ravel()
    wts = lr.weights * lr.nodes ** moment
    body = np.exp(-np.outer(flat, lr.nodes)) @ wts
    tail = np.zeros(flat.shape)
    if lr.tail_coef != 0.0:
        beta, U = lr.tail_exp - moment, lr.upper
        zero = flat * U < 1e-300
        tail[zero] = lr.tail_coef * U ** (1.0 - beta) / (beta - 1.0) if beta > 1.0 else np.inf
        y = flat[~zero] * U
        ok = y < 700.0
        part = np.zeros(y.shape)
        part[ok] = lr.tail_coef * flat[~zero][ok] ** (beta - 1.0) * _upper_gamma(1.0 - beta, y[ok])
        tail[~zero] = part
    return (body + tail).reshape(a.shape)
