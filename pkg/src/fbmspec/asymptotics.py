"""Closed-form asymptotic eigenvalues and eigenfunctions.

fBm covariance:  lambda_n = sin(pi H) Gamma(2H+1) nu_n^{-2H-1},
fBn covariance:  lambda_n = sin(pi H) Gamma(2H+1) nu_n^{1-2H},

with nu_n either the leading term n*pi (``Order.FIRST``) or the two-term
expansion (``Order.SECOND``). Eigenfunctions are an oscillatory part plus
boundary layers built from the Laplace transform of rho0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .specfun import Family, HurstParams, ell_H, gamma_fn, layer_transform

__all__ = [
    "Order",
    "Provenance",
    "EigenEstimate",
    "spectral_prefactor",
    "nu_fbm",
    "lambda_fbm",
    "C_H",
    "lambda_fbm_expansion",
    "estimate_fbm",
    "eigfun_fbm",
    "endpoint_and_average_fbm",
    "nu_fbn",
    "lambda_fbn",
    "estimate_fbn",
    "eigfun_fbn",
    "average_rate_fbn",
]


class Order(str, enum.Enum):
    FIRST = "first"
    SECOND = "second"


class Provenance(str, enum.Enum):
    ASYMPTOTIC = "asymptotic"
    NYSTROM = "nystrom"
    IASOLVER = "iasolver"


@dataclass(frozen=True)
class EigenEstimate:
    n: int
    nu: float
    lam: float
    family: Family
    order: Order | None = None
    provenance: Provenance = Provenance.ASYMPTOTIC
    C_H: float | None = None


def _check_n(n):
    if int(n) != n or n < 1:
        raise ValueError(f"mode index must be a positive integer, got {n}")
    return int(n)


def spectral_prefactor(H: float) -> float:
    """sin(pi H) Gamma(2H + 1)."""
    return math.sin(math.pi * H) * gamma_fn(2.0 * H + 1.0)


# ---------------------------------------------------------------------------
# fBm


def nu_fbm(n: int, H: float, order: Order | str = Order.SECOND) -> float:
    n = _check_n(n)
    if Order(order) is Order.FIRST:
        return n * math.pi
    if H == 0.5:
        return (n - 0.5) * math.pi
    # arcsin(l / sqrt(1 + l^2)) == arctan(l)
    return (n - 0.5) * math.pi + (1.0 - 2.0 * H) * math.pi / 4.0 + math.atan(ell_H(H))


def lambda_fbm(n: int, H: float, order: Order | str = Order.SECOND) -> float:
    n = _check_n(n)
    if not 0.0 < H <= 1.0:
        raise ValueError("H must lie in (0, 1]")
    if H == 1.0:
        # degenerate drift process xi*t: a single nonzero eigenvalue
        return 1.0 / 3.0 if n == 1 else 0.0
    return spectral_prefactor(H) * nu_fbm(n, H, order) ** (-2.0 * H - 1.0)


def C_H(H: float) -> float:
    """Constant of lambda_n = prefactor/(n pi)^{2H+1} (1 - C_H/n + O(n^-2))."""
    kappa = -0.5 + (1.0 - 2.0 * H) / 4.0 + math.atan(ell_H(H)) / math.pi
    return (2.0 * H + 1.0) * kappa


def lambda_fbm_expansion(n: int, H: float) -> float:
    n = _check_n(n)
    return spectral_prefactor(H) / (n * math.pi) ** (2.0 * H + 1.0) * (1.0 - C_H(H) / n)


def estimate_fbm(n: int, H: float, order: Order | str = Order.SECOND) -> EigenEstimate:
    order = Order(order)
    nu = nu_fbm(n, H, order) if H < 1.0 else float("nan")
    return EigenEstimate(n, nu, lambda_fbm(n, H, order), Family.FBM, order,
                         C_H=C_H(H) if H < 1.0 else None)


def eigfun_fbm(n: int, H: float, x):
    """Asymptotic eigenfunction of the fBm covariance operator at points x in [0, 1]."""
    n = _check_n(n)
    x_in = np.asarray(x, dtype=float)
    xs = np.atleast_1d(x_in)
    if np.any((xs < 0.0) | (xs > 1.0)):
        raise ValueError("x must lie in [0, 1]")
    if H == 1.0:
        if n != 1:
            raise ValueError("for H = 1 only the first eigenfunction is determined")
        val = math.sqrt(3.0) * xs
    elif H == 0.5:
        val = math.sqrt(2.0) * np.sin((n - 0.5) * math.pi * xs)
    else:
        p = HurstParams(H, Family.FBM)
        nu = nu_fbm(n, H)
        ell = ell_H(H)
        val = math.sqrt(2.0) * np.sin(nu * xs + (2.0 * H - 1.0) * math.pi / 8.0 - math.atan(ell))
        left = (layer_transform(p, nu * xs, 1) - ell * layer_transform(p, nu * xs)) / math.sqrt(1.0 + ell * ell)
        right = layer_transform(p, nu * (1.0 - xs))
        val = val + math.sqrt(2.0 * H + 1.0) / math.pi * (left - (-1) ** n * right)
    return val if x_in.ndim else float(val[0])


def endpoint_and_average_fbm(n: int, H: float) -> tuple[float, float]:
    """Leading-order phi_n(1) and int_0^1 phi_n for the fBm eigenfunctions.

    Signs follow the convention of :func:`eigfun_fbm`, whose oscillatory part
    starts as +sqrt(2) sin(nu x + ...).
    """
    n = _check_n(n)
    if not 0.0 < H < 1.0:
        raise ValueError("H must lie in (0, 1)")
    ell = ell_H(H)
    phi1 = -((-1) ** n) * math.sqrt(2.0 * H + 1.0)
    ave = math.sqrt((2.0 * H + 1.0) / (1.0 + ell * ell)) / nu_fbm(n, H)
    return phi1, ave


# ---------------------------------------------------------------------------
# fBn


def _check_fbn_H(H):
    if not 0.0 < H < 1.0 or H == 0.5:
        raise ValueError("the noise family needs H in (0, 1) with H != 1/2")


def nu_fbn(n: int, H: float, order: Order | str = Order.SECOND) -> float:
    n = _check_n(n)
    _check_fbn_H(H)
    if Order(order) is Order.FIRST:
        return n * math.pi
    return (n - 0.5) * math.pi + (1.0 - 2.0 * H) * math.pi / 4.0


def lambda_fbn(n: int, H: float, order: Order | str = Order.SECOND) -> float:
    return spectral_prefactor(H) * nu_fbn(n, H, order) ** (1.0 - 2.0 * H)


def estimate_fbn(n: int, H: float, order: Order | str = Order.SECOND) -> EigenEstimate:
    order = Order(order)
    return EigenEstimate(n, nu_fbn(n, H, order), lambda_fbn(n, H, order), Family.FBN, order)


def eigfun_fbn(n: int, H: float, x):
    """Asymptotic eigenfunction of the fBn covariance operator at points x in [0, 1]."""
    n = _check_n(n)
    _check_fbn_H(H)
    x_in = np.asarray(x, dtype=float)
    xs = np.atleast_1d(x_in)
    if np.any((xs < 0.0) | (xs > 1.0)):
        raise ValueError("x must lie in [0, 1]")
    p = HurstParams(H, Family.FBN)
    nu = nu_fbn(n, H)
    val = math.sqrt(2.0) * np.sin(nu * xs + (2.0 * H + 1.0) * math.pi / 8.0)
    layer = layer_transform(p, nu * xs) - (-1) ** n * layer_transform(p, nu * (1.0 - xs))
    val = val - math.sqrt(abs(2.0 * H - 1.0)) / math.pi * layer
    return val if x_in.ndim else float(val[0])


def average_rate_fbn(n: int, H: float) -> float:
    """Exponent r in <1, phi_{2n-1}> ~ const * nu^r (only the rate is known)."""
    _check_n(n)
    _check_fbn_H(H)
    return -max(1.0, 0.5 + H)
