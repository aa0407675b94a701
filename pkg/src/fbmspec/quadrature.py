"""Composite Gauss-Legendre rules on graded panels."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = [
    "gauss_legendre",
    "panel_rule",
    "geometric_breaks",
    "unit_interval_rule",
    "half_line_rule",
    "power_law_ends",
]


@lru_cache(maxsize=32)
def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(a: float, b: float, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _leggauss(order)
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


def panel_rule(breaks, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Tensor a Gauss-Legendre rule over consecutive panels ``breaks[k]..breaks[k+1]``."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = _leggauss(order)
    a = breaks[:-1, None]
    b = breaks[1:, None]
    half = 0.5 * (b - a)
    nodes = (half * x + 0.5 * (a + b)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def geometric_breaks(a: float, b: float, toward: str, ratio: float = 0.5,
                     smallest: float = 1e-15) -> np.ndarray:
    """Panel breakpoints on [a, b] shrinking geometrically toward one or both ends.

    ``smallest`` is relative to the length of [a, b].
    """
    length = b - a
    depth = int(np.ceil(np.log(smallest) / np.log(ratio)))
    offs = ratio ** np.arange(depth, 0, -1)
    if toward == "left":
        return np.concatenate(([a], a + length * offs, [b]))
    if toward == "right":
        return np.concatenate(([a], b - length * offs[::-1], [b]))
    if toward == "both":
        mid = 0.5 * (a + b)
        left = geometric_breaks(a, mid, "left", ratio, smallest * 2)
        right = geometric_breaks(mid, b, "right", ratio, smallest * 2)
        return np.concatenate((left, right[1:]))
    raise ValueError(f"unknown grading direction {toward!r}")


def unit_interval_rule(order: int = 16, ratio: float = 0.5,
                       smallest: float = 1e-16) -> tuple[np.ndarray, np.ndarray]:
    """Rule on (0, 1) graded toward 0; resolves kernels like 1/(t+u) for tiny u."""
    return panel_rule(geometric_breaks(0.0, 1.0, "left", ratio, smallest), order)


def half_line_rule(order: int = 16, lo: float = 1e-14, hi: float = 1e14,
                   per_octave: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Log-spaced panels covering [lo, hi] (power-law integrands on the half-line)."""
    n = int(np.ceil(np.log2(hi / lo) * per_octave))
    return panel_rule(np.geomspace(lo, hi, n + 1), order)


def power_law_ends(f, lo: float, hi: float, step: float = 4.0) -> tuple[float, float]:
    """Remainders int_0^lo f and int_hi^inf f for f behaving like a power at each end.

    The local exponents come from f at (lo, step*lo) and (hi/step, hi); an end
    that is not integrable under that model contributes nothing.
    """
    a0, a1 = f(np.array([lo, step * lo]))
    b0, b1 = f(np.array([hi / step, hi]))
    head = tail = 0.0
    if a0 != 0.0 and a1 / a0 > 0.0:
        q = np.log(a1 / a0) / np.log(step)
        if q > -1.0:
            head = float(a0 * lo / (q + 1.0))
    if b1 != 0.0 and b0 / b1 > 0.0:
        p = np.log(b0 / b1) / np.log(step)
        if p > 1.0:
            tail = float(b1 * hi / (p - 1.0))
    return head, tail
