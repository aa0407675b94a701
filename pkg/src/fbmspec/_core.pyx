# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: kappa matrix assembly and cyclic Jacobi sweeps."""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow, sqrt, fabs, copysign, exp, log

cnp.import_array()


cdef double _kappa_one(double u, double v, double alpha, double beta,
                       const double[:] wnq, const double[:] ww) nogil:
    # wnq holds the inner nodes raised to q = 2/(alpha - 1)
    cdef double q = 2.0 / (alpha - 1.0)
    cdef double e = 0.5 * (alpha - 3.0)
    cdef double m = u if u > v else v
    cdef double n = v if u > v else u
    cdef double top = pow(1.0 - m, 1.0 / q)
    cdef double d = m - n
    cdef double acc = 0.0, s
    cdef Py_ssize_t k
    for k in range(wnq.shape[0]):
        s = (1.0 - m) * wnq[k]
        acc += ww[k] * exp((1.0 - alpha) * log(m + s) + e * log(d + s))
    return beta * pow(u * v, 0.5 * (alpha - 1.0)) * q * top * acc


def kappa_pairs(u, v, double alpha, double beta, wn, ww):
    cdef const double[:] uu = np.ascontiguousarray(u, dtype=np.float64).ravel()
    cdef const double[:] vv = np.ascontiguousarray(v, dtype=np.float64).ravel()
    cdef const double[:] wnv = np.ascontiguousarray(wn, dtype=np.float64) ** (2.0 / (alpha - 1.0))
    cdef const double[:] wwv = np.ascontiguousarray(ww, dtype=np.float64)
    out = np.empty(uu.shape[0])
    cdef double[:] o = out
    cdef Py_ssize_t k
    with nogil:
        for k in range(uu.shape[0]):
            o[k] = _kappa_one(uu[k], vv[k], alpha, beta, wnv, wwv)
    return out.reshape(np.shape(u))


def kappa_matrix(t, double alpha, double beta, wn, ww):
    cdef const double[:] tt = np.ascontiguousarray(t, dtype=np.float64)
    cdef const double[:] wnv = np.ascontiguousarray(wn, dtype=np.float64) ** (2.0 / (alpha - 1.0))
    cdef const double[:] wwv = np.ascontiguousarray(ww, dtype=np.float64)
    cdef Py_ssize_t N = tt.shape[0], i, j
    K = np.zeros((N, N))
    cdef double[:, :] Kv = K
    cdef double val
    with nogil:
        for i in range(N):
            for j in range(i + 1, N):
                val = _kappa_one(tt[i], tt[j], alpha, beta, wnv, wwv)
                Kv[i, j] = val
                Kv[j, i] = val
    return K


def jacobi_eigh(A, double tol=1e-14, int max_sweeps=100):
    """Cyclic Jacobi with threshold; returns ascending eigenvalues, eigenvectors, sweeps."""
    a = np.array(A, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t N = a.shape[0]
    v = np.eye(N)
    cdef double[:, :] M = a
    cdef double[:, :] V = v
    cdef Py_ssize_t p, q, k
    cdef int sweep
    cdef double off, tot, scale, thresh, apq, theta, t, c, s, x, y
    tot = 0.0
    for p in range(N):
        for q in range(N):
            tot += M[p, q] * M[p, q]
    scale = sqrt(tot)
    if scale == 0.0:
        scale = 1.0
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(N):
            for q in range(N):
                if p != q:
                    off += M[p, q] * M[p, q]
        off = sqrt(off)
        if off <= tol * scale:
            w = np.diag(a).copy()
            idx = np.argsort(w)
            return w[idx], v[:, idx], sweep
        thresh = 0.2 * off / (N * N) if sweep < 3 else 0.0
        with nogil:
            for p in range(N - 1):
                for q in range(p + 1, N):
                    apq = M[p, q]
                    if fabs(apq) <= thresh or apq == 0.0:
                        continue
                    theta = (M[q, q] - M[p, p]) / (2.0 * apq)
                    t = copysign(1.0, theta) / (fabs(theta) + sqrt(theta * theta + 1.0))
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    for k in range(N):
                        x = M[k, p]
                        y = M[k, q]
                        M[k, p] = c * x - s * y
                        M[k, q] = s * x + c * y
                    for k in range(N):
                        x = M[p, k]
                        y = M[q, k]
                        M[p, k] = c * x - s * y
                        M[q, k] = s * x + c * y
                    M[p, q] = 0.0
                    M[q, p] = 0.0
                    for k in range(N):
                        x = V[k, p]
                        y = V[k, q]
                        V[k, p] = c * x - s * y
                        V[k, q] = s * x + c * y
    raise RuntimeError("Jacobi iteration did not converge in %d sweeps" % max_sweeps)
