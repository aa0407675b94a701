"""Pure NumPy implementations of the hot kernels in ``_core.pyx``.

Used when the compiled extension is unavailable, or when ``FBMSPEC_PURE=1``.
"""

from __future__ import annotations

import math

import numpy as np


def kappa_pairs(u, v, alpha, beta, wn, ww):
    """kappa(u_k, v_k) for paired 1-d arrays, inner rule (wn, ww) on [0, 1]."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    q = 2.0 / (alpha - 1.0)
    e = 0.5 * (alpha - 3.0)
    m = np.maximum(u, v)
    n = np.minimum(u, v)
    top = (1.0 - m) ** (1.0 / q)
    out = np.empty(u.shape)
    chunk = max(1, 200000 // max(len(wn), 1))
    for a in range(0, u.size, chunk):
        sl = slice(a, a + chunk)
        s = (1.0 - m[sl, None]) * wn[None, :] ** q
        f = (m[sl, None] + s) ** (1.0 - alpha) * ((m - n)[sl, None] + s) ** e
        out[sl] = q * top[sl] * (f @ ww)
    return beta * (u * v) ** (0.5 * (alpha - 1.0)) * out


def kappa_matrix(t, alpha, beta, wn, ww):
    """Symmetric matrix kappa(t_i, t_j) with zero diagonal."""
    t = np.asarray(t, dtype=float)
    N = t.size
    iu, ju = np.triu_indices(N, 1)
    vals = kappa_pairs(t[iu], t[ju], alpha, beta, wn, ww)
    K = np.zeros((N, N))
    K[iu, ju] = vals
    K[ju, iu] = vals
    return K


def jacobi_eigh(A, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi with threshold; returns ascending eigenvalues and eigenvectors."""
    A = np.array(A, dtype=float, copy=True)
    N = A.shape[0]
    V = np.eye(N)
    scale = math.sqrt(np.sum(A * A)) or 1.0
    for sweep in range(max_sweeps):
        off = math.sqrt(np.sum((A - np.diag(np.diag(A))) ** 2))
        if off <= tol * scale:
            w = np.diag(A).copy()
            idx = np.argsort(w)
            return w[idx], V[:, idx], sweep
        thresh = 0.2 * off / (N * N) if sweep < 3 else 0.0
        for p in range(N - 1):
            for q in range(p + 1, N):
                apq = A[p, q]
                if abs(apq) <= thresh or apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    raise RuntimeError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
