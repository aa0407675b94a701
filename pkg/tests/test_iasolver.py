import math

import numpy as np
import pytest

from fbmspec import iasolver as ia
from fbmspec.asymptotics import Order, lambda_fbm, nu_fbm, nu_fbn
from fbmspec.nystrom import galerkin_fbn_spectrum
from fbmspec.quadrature import geometric_breaks, panel_rule
from fbmspec.specfun import Family, HurstParams


def _rule():
    br = np.union1d(geometric_breaks(0.0, 1.0, "both", 0.5, 1e-12), np.linspace(0, 1, 80))
    return panel_rule(br, 16)


@pytest.mark.parametrize("n", [1, 2, 5, 20])
def test_brownian_case_exact(n):
    sol = ia.solve_nu_fbm(n, 0.5)
    assert sol.lam == pytest.approx(1.0 / ((n - 0.5) * math.pi) ** 2, rel=1e-12)


@pytest.mark.parametrize("H,n", [(0.75, 1), (0.75, 10), (0.75, 40), (0.25, 1), (0.25, 10)])
def test_fbm_eigenvalues_against_nystrom(spectra, H, n):
    s = spectra("fbm", H, 2000, 40)
    lam = ia.solve_nu_fbm(n, H).lam
    assert lam == pytest.approx(s.eigenvalues[n - 1], rel=2e-6 * n)


def test_fbm_frozen_values():
    # n=1 at H=0.75: Richardson limit of Nyström eigenvalues at N = 1000, 2000, 4000
    assert ia.solve_nu_fbm(1, 0.75).lam == pytest.approx(0.367178488245, rel=1e-9)
    assert ia.solve_nu_fbm(10, 0.75).lam == pytest.approx(1.944056097e-4, rel=1e-8)
    assert ia.solve_nu_fbm(1, 0.25).lam == pytest.approx(0.44371135542, rel=1e-9)


@pytest.mark.parametrize("H,n", [(0.75, 1), (0.75, 6), (0.25, 3)])
def test_fbm_eigenfunction_identities(H, n):
    sol = ia.solve_nu_fbm(n, H)
    ef = ia.eigenfunction_fbm(sol)
    x, w = _rule()
    assert w @ ef(x) == pytest.approx(ef.integral, rel=1e-9, abs=1e-12)
    assert ef.integral == pytest.approx(-2.0 / sol.nu, rel=1e-7)
    assert ef(1.0, normalized=True) ** 2 == pytest.approx(2 * H + 1, rel=1e-6)
    assert ef(0.0) == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("n", [2, 9])
def test_fbm_eigenfunction_against_nystrom(spectra, n):
    s = spectra("fbm", 0.75, 2000, 40)
    ef = ia.eigenfunction_fbm(ia.solve_nu_fbm(n, 0.75))
    x = s.grid.nodes
    v = ef(x, normalized=True)
    ref = s.eigenfunction(n)
    v = v if v @ (s.grid.weights * ref) > 0 else -v
    assert math.sqrt(s.grid.weights @ (v - ref) ** 2) < 1e-5


@pytest.mark.parametrize("H", [0.25, 0.75])
def test_fbn_eigenvalues_against_galerkin(H):
    g = galerkin_fbn_spectrum(H, 4000, 5)
    lam = np.array([ia.solve_fbn(n, H).lam for n in range(1, 6)])
    assert np.allclose(lam, g, rtol=1e-3)


def test_fbn_frozen_values():
    # n=1 at H=0.75 and 0.9: Richardson limits of Nyström eigenvalues
    assert ia.solve_fbn(1, 0.75).lam == pytest.approx(1.00609439320, rel=1e-9)
    assert ia.solve_fbn(1, 0.9).lam == pytest.approx(1.00126897010, rel=1e-9)
    assert ia.solve_fbn(1, 0.25).lam == pytest.approx(0.85978671622, rel=1e-9)


@pytest.mark.parametrize("H", [0.25, 0.75])
@pytest.mark.parametrize("n", [1, 2, 7, 12])
def test_fbn_parity(H, n):
    ef = ia.eigenfunction_fbn(ia.solve_fbn(n, H))
    x = np.linspace(0, 1, 101)
    assert np.max(np.abs(ef(x) - (-1) ** (n + 1) * ef(1 - x))) <= 1e-8 * np.max(np.abs(ef(x)))
    assert ef.parity == (-1) ** (n + 1)


@pytest.mark.parametrize("H", [0.25, 0.75])
def test_fbn_frequency_residual_decays(H):
    for n in (5, 10, 30):
        assert abs(ia.solve_fbn(n, H).nu - nu_fbn(n, H)) <= 10.0 / n


@pytest.mark.parametrize("H", [0.6, 0.75, 0.9])
def test_fbn_endpoint_value_of_symmetric_modes(H):
    # observed: normalized odd modes satisfy |phi_n(1)| = sqrt(2H - 1) for H > 1/2
    for n in (1, 5):
        ef = ia.eigenfunction_fbn(ia.solve_fbn(n, H))
        assert abs(ef(1.0, normalized=True)) == pytest.approx(math.sqrt(2 * H - 1), rel=1e-7)


@pytest.mark.parametrize("H,beta", [(0.25, 0.3), (0.75, 0.25), (0.75, 0.6)])
def test_scalar_product_constant_two_routes(H, beta):
    a = ia.scalar_product_constant(H, beta, "layer")
    b = ia.scalar_product_constant(H, beta, "residue")
    assert a == pytest.approx(b, rel=1e-6)


@pytest.mark.parametrize("parity", [0, 1])
def test_scalar_product_power_against_exact_mode(parity):
    # relative gap closes like nu^{1-2H}, the next order of the expansion
    H, beta = 0.75, 0.25
    gaps, nus = [], []
    for n in (20 + parity, 80 + parity):
        ef = ia.eigenfunction_fbn(ia.solve_fbn(n, H))
        br = np.union1d(geometric_breaks(0.0, 1.0, "both", 0.5, 1e-14), np.linspace(0, 1, n + 2))
        x, w = panel_rule(br, 16)
        v = w @ (x ** -beta * ef(x, normalized=True))
        gaps.append(abs(abs(v) / abs(ia.scalar_product_power(n, H, beta)) - 1.0))
        nus.append(ef.nu)
    rate = math.log(gaps[0] / gaps[1]) / math.log(nus[1] / nus[0])
    assert rate == pytest.approx(2 * H - 1, abs=0.1)
    assert gaps[1] < 0.04


def test_scalar_product_validation():
    with pytest.raises(ValueError):
        ia.scalar_product_constant(0.75, 1.2)
    with pytest.raises(ValueError):
        ia.scalar_product_constant(0.75, 0.3, "other")


def test_fixed_point_operator_is_contractive_at_high_frequency():
    p = HurstParams(0.75, Family.FBM)
    g = ia.half_line_grid(60.0)
    A = ia.A_matrix(g, 60.0, p)
    assert np.max(np.abs(np.linalg.eigvals(A))) < 1.0


def test_invalid_index():
    with pytest.raises(ValueError):
        ia.solve_nu_fbm(0, 0.7)
    with pytest.raises(ValueError):
        ia.solve_fbn(1.5, 0.7)


def test_fbm_second_order_residual_small():
    for n in (10, 40):
        assert abs(ia.solve_nu_fbm(n, 0.75).nu - nu_fbm(n, 0.75)) < 3e-3


def test_exact_modes_improve_on_two_term_formula(spectra):
    s = spectra("fbm", 0.75, 2000, 40)
    better = 0
    for n in range(5, 41):
        ref = s.eigenvalues[n - 1]
        better += abs(ia.solve_nu_fbm(n, 0.75).lam - ref) <= abs(
            lambda_fbm(n, 0.75, Order.SECOND) - ref)
    assert better >= 0.9 * 36


def test_half_line_solution_decay_uniform_in_frequency():
    # sup |p(t) - 1| nu t stays bounded as nu grows
    for branch in (ia.Branch.PLUS, ia.Branch.MINUS):
        m = []
        for nu in (20.0, 40.0, 80.0):
            s = ia._solve_p_fbn(0.75, nu, 1, branch)
            m.append(np.max(np.abs(s.p_fn.values - 1) * nu * s.p_fn.nodes))
        assert max(m) < 1.0
        assert max(m) / min(m) < 1.2


@pytest.mark.parametrize("n", [1, 3, 12])
def test_fbm_endpoint_from_half_line_data(n):
    s = ia.solve_nu_fbm(n, 0.75)
    v = -2 * s.xi / s.eta
    assert abs(v.imag) < 1e-10
    assert ia.eigenfunction_fbm(s)(1.0) == pytest.approx(v.real, rel=1e-6)
