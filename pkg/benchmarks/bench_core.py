"""Compiled core against the NumPy fallback on the two hot kernels.

Run:  python3 benchmarks/bench_core.py [--n-kappa 400] [--n-jacobi 200]
"""

import argparse
import time

import numpy as np

from fbmspec import _fallback
from fbmspec.operators import _kappa_inner_rule, kappa_beta

try:
    from fbmspec import _core
except ImportError:
    _core = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n-kappa", type=int, default=400)
    ap.add_argument("--n-jacobi", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    alpha = 1.5
    t = (np.arange(args.n_kappa) + 0.5) / args.n_kappa
    wn, ww = _kappa_inner_rule(12, 1e-6)
    beta = kappa_beta(alpha)
    rng = np.random.default_rng(0)
    A = rng.standard_normal((args.n_jacobi, args.n_jacobi))
    A = A + A.T

    rows = []
    tf, Kf = best_of(lambda: _fallback.kappa_matrix(t, alpha, beta, wn, ww), args.repeat)
    rows.append(("kappa_matrix", args.n_kappa, "fallback", tf, 0.0))
    tj, (wf, _, _) = best_of(lambda: _fallback.jacobi_eigh(A), 1)
    rows.append(("jacobi_eigh", args.n_jacobi, "fallback", tj, 0.0))
    tl, wl = best_of(lambda: np.linalg.eigvalsh(A), args.repeat)
    rows.append(("eigvalsh", args.n_jacobi, "lapack", tl, float(np.max(np.abs(wl - wf)))))
    if _core is not None:
        tc, Kc = best_of(lambda: _core.kappa_matrix(t, alpha, beta, wn, ww), args.repeat)
        rows.append(("kappa_matrix", args.n_kappa, "compiled", tc,
                     float(np.max(np.abs(Kc - Kf)) / np.max(np.abs(Kf)))))
        tjc, (wc, _, _) = best_of(lambda: _core.jacobi_eigh(A), args.repeat)
        rows.append(("jacobi_eigh", args.n_jacobi, "compiled", tjc, float(np.max(np.abs(wc - wf)))))
    else:
        print("compiled core not built; fallback timings only")

    print(f"{'kernel':<14}{'N':>6}  {'backend':<10}{'seconds':>10}{'max diff':>12}")
    for name, n, backend, sec, diff in rows:
        print(f"{name:<14}{n:>6}  {backend:<10}{sec:>10.4f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
