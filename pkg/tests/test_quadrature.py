import math

import numpy as np
import pytest

from fbmspec.quadrature import (gauss_legendre, geometric_breaks, half_line_rule,
                                panel_rule, unit_interval_rule)


@pytest.mark.parametrize("order", [4, 8, 16])
def test_gauss_legendre_is_exact_for_polynomials(order):
    x, w = gauss_legendre(-1.0, 2.0, order)
    for k in range(2 * order):
        exact = (2.0 ** (k + 1) - (-1.0) ** (k + 1)) / (k + 1)
        assert w @ x ** k == pytest.approx(exact, rel=1e-12, abs=1e-12)


def test_panel_rule_with_grading_resolves_endpoint_singularity():
    x, w = panel_rule(geometric_breaks(0.0, 1.0, "left", 0.5, 1e-14), 16)
    assert w @ x ** -0.5 == pytest.approx(2.0, rel=1e-6)


def test_two_sided_grading_is_symmetric():
    br = geometric_breaks(0.0, 1.0, "both", 0.5, 1e-8)
    assert np.allclose(br, 1.0 - br[::-1], atol=1e-15)
    assert np.all(np.diff(br) > 0)


def test_unit_interval_rule_handles_near_singular_kernel():
    x, w = unit_interval_rule()
    u = 1e-10
    assert w @ (1.0 / (x + u)) == pytest.approx(math.log((1.0 + u) / u), rel=1e-10)


def test_half_line_rule_moments():
    u, w = half_line_rule(16, 1e-14, 1e14)
    assert w @ np.exp(-u) == pytest.approx(1.0, rel=1e-12)
    assert w @ (u ** -0.5 * np.exp(-u)) == pytest.approx(math.sqrt(math.pi), rel=1e-6)


def test_unknown_grading_direction_rejected():
    with pytest.raises(ValueError):
        geometric_breaks(0.0, 1.0, "middle")
