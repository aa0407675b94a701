"""Randomized invariants across modules."""

import io
import csv
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from fbmspec import applications as app
from fbmspec import cli
from fbmspec.asymptotics import Order, eigfun_fbm, lambda_fbm, nu_fbm
from fbmspec.operators import GridFunction, KernelSpec, apply_operator, fbm_cov, fbn_kernel
from fbmspec.sampler import box_muller_normals
from fbmspec.specfun import Family, HurstParams, b_alpha, ell_H, theta0

hurst = st.floats(0.02, 0.98).filter(lambda h: abs(h - 0.5) > 1e-3)
unit = st.floats(0.0, 1.0)
slow = settings(max_examples=20, deadline=None,
                suppress_health_check=[HealthCheck.too_slow])


@given(hurst)
def test_ell_is_b_alpha(H):
    assert ell_H(H) == pytest.approx(b_alpha(2 - 2 * H), abs=1e-12)
    assert math.atan(ell_H(H)) == pytest.approx(math.pi / 2 * (H - 0.5) / (H + 0.5), abs=1e-12)


@given(hurst, st.floats(1e-6, 1e6), st.sampled_from([Family.FBM, Family.FBN]))
def test_phase_reflection(H, u, fam):
    p = HurstParams(H, fam)
    assert theta0(u, p) + theta0(1 / u, p) == pytest.approx(p.theta_sum, abs=1e-12)


@given(hurst, unit, unit)
def test_covariance_symmetric(H, s, t):
    p = HurstParams(H, Family.FBM)
    assert fbm_cov(s, t, p) == fbm_cov(t, s, p)
    if s != t and H > 0.5:
        q = HurstParams(H, Family.FBN)
        assert fbn_kernel(s, t, q) == fbn_kernel(t, s, q)


@given(hurst, st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_operator_linear(H, a, b, seed):
    rng = np.random.default_rng(seed)
    edges = np.linspace(0, 1, 41)
    x, w = 0.5 * (edges[1:] + edges[:-1]), np.diff(edges)
    f = GridFunction(x, w, rng.standard_normal(40), edges)
    g = f.with_values(rng.standard_normal(40))
    k = KernelSpec.for_model("fbm", H)
    lhs = apply_operator(f.with_values(a * f.values + b * g.values), k).values
    rhs = a * apply_operator(f, k).values + b * apply_operator(g, k).values
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


@given(st.integers(1, 500), unit)
def test_brownian_collapse(n, x):
    assert nu_fbm(n, 0.5, Order.SECOND) == pytest.approx((n - 0.5) * math.pi, rel=1e-14)
    assert lambda_fbm(n, 0.5, Order.SECOND) == pytest.approx(1 / ((n - 0.5) * math.pi) ** 2,
                                                             rel=1e-13)
    ref = math.sqrt(2) * math.sin((n - 0.5) * math.pi * x)
    assert float(eigfun_fbm(n, 0.5, np.array([x]))[0]) == pytest.approx(ref, abs=1e-10)


@given(st.floats(0.3, 0.9), st.integers(1, 60))
def test_second_order_eigenvalues_continuous_in_H(H, n):
    h = 1e-6
    a, b = lambda_fbm(n, H, Order.SECOND), lambda_fbm(n, H + h, Order.SECOND)
    assert abs(b - a) < 1e-3 * a


@given(st.sampled_from([("fbm", 0.3), ("fbm", 0.75), ("fbn", 0.7), ("fbn", 0.3)]),
       st.floats(1e-6, 1e3), st.integers(0, 2**32 - 1))
@slow
def test_perturbed_quadratic_form_nonnegative(km, eps, seed):
    model, H = km
    rng = np.random.default_rng(seed)
    edges = np.linspace(0, 1, 61)
    x, w = 0.5 * (edges[1:] + edges[:-1]), np.diff(edges)
    f = GridFunction(x, w, rng.standard_normal(60), edges)
    u = app.solve_perturbed(KernelSpec.for_model(model, H), eps, f).u_eps
    assert u.inner(f) >= -1e-12 * f.norm() ** 2


@given(hurst, st.floats(0.01, 100.0))
def test_constants_positive(H, a):
    assert app.beta_H(H) > 0
    assert math.isfinite(app.gamma_H(H))
    assert app.P_inf(H, a) > 0


@given(st.integers(0, 2**40), st.integers(0, 10**6), st.integers(1, 64))
def test_normals_reproducible(seed, index, m):
    a = box_muller_normals(seed, index, m)
    assert np.array_equal(a, box_muller_normals(seed, index, m))
    assert a.shape == (m,) and np.all(np.isfinite(a))


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1,
                max_size=8))
def test_csv_round_trips_floats(xs):
    text = cli.render({"v": xs}, {}, "csv")
    rows = list(csv.reader(io.StringIO(text, newline="")))
    assert rows[0] == ["v"]
    assert [float(r[0]) for r in rows[1:]] == [float(v) for v in xs]
