"""Applications of the spectral asymptotics.

* small-ball constants beta(H), gamma(H) and the distortion constant C_d,
* the singularly perturbed equation eps*u + K u = f, its eps -> 0 rates and
  the bracket of the mixed fBm martingale,
* the steady-state error of the linear filter for an fBm signal.

Spectral sums run over exact modes from the integro-algebraic solver up to a
cutoff and over an asymptotic tail model beyond it. The tail is summed by
Euler-Maclaurin with the integral taken on a logarithmic panel rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import zeta

from .asymptotics import Order, lambda_fbm, spectral_prefactor
from .iasolver import (ConvergenceError, eigenfunction_fbm, eigenfunction_fbn,
                       scalar_product_constant, solve_fbn, solve_nu_fbm)
from .operators import GridFunction, KernelFamily, KernelSpec, operator_matrix
from .quadrature import panel_rule
from .specfun import ell_H

__all__ = [
    "SmallBallAsymptotics",
    "PerturbedSolution",
    "FilteringReport",
    "RateFit",
    "beta_H",
    "gamma_H",
    "distortion_constant",
    "small_ball",
    "a_H",
    "u0_closed_form",
    "u0_norm_sq",
    "u0_average",
    "UnitForcingSpectrum",
    "unit_forcing_spectrum",
    "solve_perturbed",
    "perturbation_rates",
    "log_rate_linearity",
    "mixed_bracket",
    "P_inf",
    "filtering_P_T",
    "filtering_error",
]


def _check_H(H, lo=0.0, hi=1.0):
    if not lo < H < hi:
        raise ValueError(f"H must lie in ({lo}, {hi}), got {H}")


# ---------------------------------------------------------------------------
# tail sums


def _tail_integral(g, a: float, decay: float, scale: float) -> float:
    """int_a^inf g(x) dx for g decaying like x^{-decay} beyond ``scale``."""
    if decay <= 1.0:
        raise ValueError("tail integrand is not integrable")
    span = math.log(max(scale, a) / a) + 40.0 / (decay - 1.0)
    span = min(span, math.log(1e250 / a))
    br = np.linspace(0.0, span, int(math.ceil(span / 0.5)) + 1)
    t, w = panel_rule(br, 16)
    x = a * np.exp(t)
    body = float(np.sum(w * x * g(x)))
    # remainder with the local power law at the cut
    X = a * math.exp(span)
    g1, g0 = g(np.array([X, X / math.e]))
    p = math.log(g0 / g1) if g1 > 0 and g0 > 0 else decay
    if not p > 1.0:
        p = decay
    return body + float(g1) * X / (p - 1.0)


def _em_sum(g, a: float, step: float, decay: float, scale: float) -> float:
    """sum_{k >= 0} g(a + k*step) by Euler-Maclaurin."""
    d = 1e-3 * a
    dg = (g(np.array([a + d]))[0] - g(np.array([a - d]))[0]) / (2.0 * d)
    return (_tail_integral(g, a, decay, scale) / step + 0.5 * g(np.array([a]))[0]
            - step / 12.0 * dg)


# ---------------------------------------------------------------------------
# small-ball constants


def beta_H(H: float) -> float:
    """Exponential-rate constant of the L2 small-ball probability of fBm."""
    _check_H(H)
    k = 2.0 * H + 1.0
    inner = spectral_prefactor(H) / math.sin(math.pi / k) ** k
    return H / k ** (k / (2.0 * H)) * inner ** (1.0 / (2.0 * H))


def gamma_H(H: float) -> float:
    """Power of eps in the exact small-ball asymptotics of fBm."""
    _check_H(H)
    return (0.75 + H * H - (1.0 + 2.0 * H) * math.atan(ell_H(H)) / math.pi) / (2.0 * H)


@lru_cache(maxsize=4096)
def _exact_lambda_fbm(n: int, H: float) -> float:
    return solve_nu_fbm(n, H).lam


@dataclass(frozen=True)
class DistortionEstimate:
    value: float
    error: float
    partial: float
    n_used: int
    fit: tuple


def distortion_constant(H: float, n_used: int = 100, *, tol: float = 1e-4,
                        detail: bool = False):
    """prod_n (lambda2_n / lambda_n)^{1/2} with lambda2 the two-term eigenvalues.

    Exact eigenvalues up to ``n_used``; beyond, half the log-ratio is modelled
    as c/n^2 + d/n^3 separately for odd and even n, fitted on the last third of
    the computed range and summed with Hurwitz zeta functions. The error bar compares against a fit on the
    last sixth. Raises ConvergenceError when it exceeds ``tol``.
    """
    _check_H(H)
    if n_used < 100:
        raise ValueError("n_used must be at least 100")
    if H == 0.5:
        est = DistortionEstimate(1.0, 0.0, 1.0, n_used, ((0.0, 0.0), (0.0, 0.0)))
        return est if detail else est.value
    n = np.arange(1, n_used + 1)
    lam = np.array([_exact_lambda_fbm(int(k), H) for k in n])
    lam2 = np.array([lambda_fbm(int(k), H, Order.SECOND) for k in n])
    r = 0.5 * np.log(lam2 / lam)
    partial = float(np.sum(r))

    def tail(first):
        # odd and even indices carry different constants
        total, coef = 0.0, []
        for parity in (1, 0):
            sel = (n >= first) & (n % 2 == parity)
            A = np.column_stack((1.0 / n[sel] ** 2, 1.0 / n[sel] ** 3))
            (c, d), *_ = np.linalg.lstsq(A, r[sel], rcond=None)
            n0 = n_used + 1 if (n_used + 1) % 2 == parity else n_used + 2
            total += c * zeta(2.0, n0 / 2.0) / 4.0 + d * zeta(3.0, n0 / 2.0) / 8.0
            coef.append((float(c), float(d)))
        return total, tuple(coef)

    t1, fit = tail(n_used - n_used // 3)
    t2, _ = tail(n_used - n_used // 6)
    value = math.exp(partial + t1)
    err = float(value * abs(t1 - t2))
    if err > tol:
        raise ConvergenceError(f"distortion constant tail unstable (error bar {err:.2e})")
    est = DistortionEstimate(value, err, math.exp(partial), n_used, fit)
    return est if detail else est.value


@dataclass(frozen=True)
class SmallBallAsymptotics:
    H: float
    beta: float
    gamma: float
    C_d: float
    n_used: int
    C_d_error: float = 0.0


def small_ball(H: float, n_used: int = 100) -> SmallBallAsymptotics:
    d = distortion_constant(H, n_used, detail=True)
    return SmallBallAsymptotics(H, beta_H(H), gamma_H(H), d.value, n_used, d.error)


# ---------------------------------------------------------------------------
# singularly perturbed equation with the noise kernel, f = 1


def a_H(H: float) -> float:
    """Constant of u0 = a_H (x(1-x))^{1/2-H}, the solution of K u0 = 1 for H > 1/2."""
    _check_H(H, 0.5)
    return -math.cos(math.pi * H) / (math.pi * H * (2.0 * H - 1.0))


def u0_closed_form(H: float, x):
    x = np.asarray(x, dtype=float)
    return a_H(H) * (x * (1.0 - x)) ** (0.5 - H)


def u0_norm_sq(H: float) -> float:
    """||u0||_2^2 in closed form."""
    return a_H(H) ** 2 * beta_fn(2.0 - 2.0 * H, 2.0 - 2.0 * H)


def u0_average(H: float) -> float:
    """<u0, 1> in closed form."""
    return a_H(H) * beta_fn(1.5 - H, 1.5 - H)


@dataclass(frozen=True)
class UnitForcingSpectrum:
    """Odd modes of the noise operator with the data entering f = 1 expansions.

    ``inner`` is <1, phi_n> (made positive), ``endpoint`` is phi_n(1) with the
    same sign choice. Beyond the last exact mode:
    lambda = S nu^{1-2H}, |phi_n(1)| = its last exact value and
    <1, phi_n> = (A + c1 nu^{1-2H} + c2/nu) nu^{-1/2-H}.
    """

    H: float
    n: np.ndarray
    nu: np.ndarray
    lam: np.ndarray
    inner: np.ndarray
    endpoint: np.ndarray
    amp_inf: float
    amp_fit: tuple[float, float]
    nu_shift: float
    eigenfunctions: list = field(repr=False, default_factory=list)

    @property
    def n_exact(self) -> int:
        return int(self.n[-1])

    def tail_model(self, x, corrected: bool = True):
        """(nu, lambda, inner, endpoint) at continuous odd index x > n_exact."""
        H = self.H
        x = np.asarray(x, dtype=float)
        nu = (x - 0.5) * math.pi + (1.0 - 2.0 * H) * math.pi / 4.0
        nu = nu + self.nu_shift * self.nu[-1] / nu
        lam = spectral_prefactor(H) * nu ** (1.0 - 2.0 * H)
        amp = np.full_like(nu, self.amp_inf)
        if corrected:
            c1, c2 = self.amp_fit
            amp = amp + c1 * nu ** (1.0 - 2.0 * H) + c2 / nu
        inner = amp * nu ** (-0.5 - H)
        return nu, lam, inner, self.endpoint[-1] * np.ones_like(nu)

    def spectral_sum(self, term, decay: float, eps: float, corrected: bool = True) -> float:
        """sum over odd n of term(lam, inner, endpoint); exact head plus modelled tail."""
        head = float(np.sum(term(self.lam, self.inner, self.endpoint)))

        def g(x):
            _, lam, inner, ep = self.tail_model(x, corrected)
            return term(lam, inner, ep)

        S = spectral_prefactor(self.H)
        scale = (eps / S) ** (1.0 / (1.0 - 2.0 * self.H)) if eps > 0 else 1.0
        return head + _em_sum(g, self.n_exact + 2.0, 2.0, decay, scale)


@lru_cache(maxsize=16)
def unit_forcing_spectrum(H: float, n_exact: int = 81, n_fit: int = 10) -> UnitForcingSpectrum:
    _check_H(H, 0.5)
    if n_exact % 2 == 0:
        n_exact += 1
    ns = np.arange(1, n_exact + 1, 2)
    nu, lam, inner, endp, efs = [], [], [], [], []
    for k in ns:
        sol = solve_fbn(int(k), H)
        ef = eigenfunction_fbn(sol)
        I = ef.integral / ef.norm
        e1 = ef(1.0, normalized=True)
        s = 1.0 if I >= 0 else -1.0
        nu.append(sol.nu)
        lam.append(sol.lam)
        inner.append(s * I)
        endp.append(s * e1)
        efs.append((s, ef))
    nu, lam, inner, endp = map(np.array, (nu, lam, inner, endp))
    amp_inf = abs(2.0 * a_H(H) * scalar_product_constant(H, H - 0.5) * spectral_prefactor(H))
    sel = slice(-n_fit, None)
    amp = inner[sel] * nu[sel] ** (0.5 + H) - amp_inf
    A = np.column_stack((nu[sel] ** (1.0 - 2.0 * H), 1.0 / nu[sel]))
    (c1, c2), *_ = np.linalg.lstsq(A, amp, rcond=None)
    shift = nu[-1] - ((ns[-1] - 0.5) * math.pi + (1.0 - 2.0 * H) * math.pi / 4.0)
    return UnitForcingSpectrum(H, ns, nu, lam, inner, endp, amp_inf, (float(c1), float(c2)),
                               float(shift), efs)


@dataclass(frozen=True)
class PerturbedSolution:
    epsilon: float
    u_eps: GridFunction
    u0: GridFunction | None
    spectrum: object
    diagnostics: dict


def _unit_diagnostics(sp: UnitForcingSpectrum, eps: float) -> dict:
    H = sp.H
    l2_sq = lambda lam, I, e: (eps * I / (lam * (eps + lam))) ** 2
    endp = lambda lam, I, e: I * e / (eps + lam)
    ave = lambda lam, I, e: I * I / (eps + lam)
    nrm = lambda lam, I, e: (I / (eps + lam)) ** 2
    out = {}
    for name, term, decay in (("l2_error", l2_sq, 3.0 - 2.0 * H),
                              ("endpoint_value", endp, 0.5 + H),
                              ("average", ave, 1.0 + 2.0 * H),
                              ("norm", nrm, 1.0 + 2.0 * H)):
        v = sp.spectral_sum(term, decay, eps)
        alt = sp.spectral_sum(term, decay, eps, corrected=False)
        if name in ("l2_error", "norm"):
            v, alt = math.sqrt(v), math.sqrt(alt)
        out[name] = v
        out[name + "_tail_uncertainty"] = abs(v - alt)
    return out


def _cell_grid(N: int):
    edges = np.linspace(0.0, 1.0, N + 1)
    return 0.5 * (edges[1:] + edges[:-1]), np.diff(edges), edges


def solve_perturbed(k: KernelSpec, epsilon: float, f: GridFunction | None = None, *,
                    n_exact: int = 81, grid_size: int = 400,
                    tail_tol: float = 0.01) -> PerturbedSolution:
    """Solve eps*u + K u = f.

    With ``f=None`` and the direct noise kernel the forcing is f = 1 and the
    solution is the spectral sum over odd modes with exact head and modelled
    tail; ``u_eps`` then holds the exact-mode partial sum on a cell grid and
    ``u0`` the closed-form limit. A GridFunction ``f`` is solved by direct
    Nyström on its own grid, i.e. the full discrete spectral sum.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if f is not None:
        M = operator_matrix(k, f.nodes, f.weights, f.edges)
        I = np.eye(f.nodes.size)
        if k.inverted:
            u = M @ np.linalg.solve(epsilon * M + I, f.values)
        else:
            u = np.linalg.solve(epsilon * I + M, f.values)
        ueps = f.with_values(u)
        resid = ueps.with_values(epsilon * u - f.values)
        return PerturbedSolution(epsilon, ueps, None, None,
                                 {"scaled_residual": resid.norm(), "f_norm": f.norm()})
    if k.family is not KernelFamily.FBN_DIRECT:
        raise ValueError("f = 1 expansions need the direct noise kernel (H > 1/2)")
    H = k.p.H
    sp = unit_forcing_spectrum(H, n_exact)
    diag = _unit_diagnostics(sp, epsilon)
    if diag["l2_error_tail_uncertainty"] > tail_tol * diag["l2_error"]:
        raise ConvergenceError("spectral tail uncertainty exceeds the tolerance")
    x, w, edges = _cell_grid(grid_size)
    vals = np.zeros_like(x)
    for (s, ef), lam, I in zip(sp.eigenfunctions, sp.lam, sp.inner):
        vals += I / (epsilon + lam) * s * ef(x, normalized=True)
    diag["endpoint_value_left"] = diag["endpoint_value"]  # odd modes are symmetric
    ueps = GridFunction(x, w, vals, edges)
    u0 = GridFunction(x, w, u0_closed_form(H, x), edges)
    return PerturbedSolution(epsilon, ueps, u0, sp, diag)


@dataclass(frozen=True)
class RateFit:
    H: float
    eps: np.ndarray
    l2_error: np.ndarray
    endpoint: np.ndarray
    l2_slope: float
    endpoint_slope: float
    expected_l2_slope: float


def _slope(x, y):
    X = np.column_stack((np.ones_like(x), np.log(x)))
    if np.linalg.cond(X) > 1e12:
        raise ValueError("regression is ill-conditioned")
    (_, s), *_ = np.linalg.lstsq(X, np.log(y), rcond=None)
    return float(s)


def perturbation_rates(H: float, eps_grid) -> RateFit:
    """Log-log slopes of ||u_eps - u0||_2 and of u_eps(1) against eps."""
    _check_H(H, 0.5)
    eps = np.asarray(eps_grid, dtype=float)
    if eps.size < 5 or np.any(eps <= 0):
        raise ValueError("need at least five positive eps values")
    sp = unit_forcing_spectrum(H)
    d = [_unit_diagnostics(sp, float(e)) for e in eps]
    l2 = np.array([v["l2_error"] for v in d])
    ep = np.array([v["endpoint_value"] for v in d])
    expected = (1.0 - H) / (2.0 * H - 1.0) if H > 2.0 / 3.0 else 1.0
    return RateFit(H, eps, l2, ep, _slope(eps, l2), _slope(eps, ep), expected)


def log_rate_linearity(H: float, eps_grid) -> tuple[float, float]:
    """R^2 and slope of ||u_eps - u0||_2 / eps against sqrt(log(1/eps))."""
    eps = np.asarray(eps_grid, dtype=float)
    sp = unit_forcing_spectrum(H)
    y = np.array([_unit_diagnostics(sp, float(e))["l2_error"] for e in eps]) / eps
    x = np.sqrt(np.log(1.0 / eps))
    slope, icpt = np.polyfit(x, y, 1)
    r2 = 1.0 - np.sum((y - (slope * x + icpt)) ** 2) / np.sum((y - y.mean()) ** 2)
    return float(r2), float(slope)


def mixed_bracket(T: float, H: float) -> tuple[float, float]:
    """<M>_T and d<M>_T/dT for the fundamental martingale of B + B^H, H > 1/2.

    With eps = T^{1-2H}: <M>_T = T^{2-2H} <u_eps, 1> and the derivative is
    eps^2 u_eps(1)^2.
    """
    _check_H(H, 0.5)
    if not T > 0:
        raise ValueError("T must be positive")
    eps = T ** (1.0 - 2.0 * H)
    d = _unit_diagnostics(unit_forcing_spectrum(H), eps)
    return T ** (2.0 - 2.0 * H) * d["average"], eps * eps * d["endpoint_value"] ** 2


# ---------------------------------------------------------------------------
# filtering


def P_inf(H: float, a: float = 1.0) -> float:
    """Steady-state error of the optimal linear filter for an fBm signal."""
    _check_H(H)
    if not a > 0:
        raise ValueError("gain must be positive")
    k = 2.0 * H + 1.0
    return (spectral_prefactor(H) ** (1.0 / k) / math.sin(math.pi / k)
            * a ** (-4.0 * H / k))


@lru_cache(maxsize=8)
def _fbm_endpoint_modes(H: float, n_exact: int):
    lam, e2 = [], []
    for n in range(1, n_exact + 1):
        sol = solve_nu_fbm(n, H)
        ef = eigenfunction_fbm(sol)
        lam.append(sol.lam)
        e2.append(ef(1.0, normalized=True) ** 2)
    return np.array(lam), np.array(e2)


@dataclass(frozen=True)
class FilteringReport:
    H: float
    a: float
    T: np.ndarray
    P_T: np.ndarray
    P_inf: float
    tail_fraction: np.ndarray
    bracket: np.ndarray | None = None
    bracket_derivative: np.ndarray | None = None

    @property
    def monotone(self) -> bool:
        d = np.diff(self.P_T)
        tol = 1e-9 * self.P_inf
        return bool(np.all(d >= -tol) or np.all(d <= tol))

    @property
    def monotone_after_peak(self) -> bool:
        """P_T may overshoot P_inf at moderate T; beyond its maximum it decreases."""
        k = int(np.argmax(self.P_T))
        return bool(np.all(np.diff(self.P_T[k:]) <= 1e-9 * self.P_inf))


def filtering_P_T(H: float, a: float, T: float, n_exact: int = 60) -> tuple[float, float]:
    """Filtering error at horizon T and the share of the sum carried by the tail."""
    _check_H(H)
    if not (a > 0 and T > 0):
        raise ValueError("gain and horizon must be positive")
    k = 2.0 * H + 1.0
    eps = a ** -2.0 * T ** (-k)
    lam, e2 = _fbm_endpoint_modes(H, n_exact)
    head = float(np.sum(e2 / (eps / lam + 1.0)))
    S = spectral_prefactor(H)

    def g(x):
        nu = (x - 0.5) * math.pi + (1.0 - 2.0 * H) * math.pi / 4.0 + math.atan(ell_H(H))
        return k / (eps * nu ** k / S + 1.0)

    scale = (S / eps) ** (1.0 / k)
    tail = _em_sum(g, n_exact + 1.0, 1.0, k, scale)
    total = head + tail
    return a ** (-4.0 * H / k) * eps ** (1.0 / k) * total, tail / total


def filtering_error(H: float, a: float, T_grid, n_exact: int = 60) -> FilteringReport:
    T = np.asarray(T_grid, dtype=float)
    vals = [filtering_P_T(H, a, float(t), n_exact) for t in T]
    P = np.array([v[0] for v in vals])
    frac = np.array([v[1] for v in vals])
    br = brd = None
    if H > 0.5:
        b = [mixed_bracket(float(t), H) for t in T]
        br = np.array([v[0] for v in b])
        brd = np.array([v[1] for v in b])
    return FilteringReport(H, a, T, P, P_inf(H, a), frac, br, brd)
