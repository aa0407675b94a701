import math

import numpy as np
import pytest

from fbmspec.nystrom import ResolutionError
from fbmspec.sampler import box_muller_normals, empirical_cov_check, kl_sample, mode_table

GRID = np.linspace(0.0, 1.0, 51)


@pytest.fixture(scope="module")
def big_samples():
    return {H: kl_sample(H, 200, GRID, 10_000, seed=7) for H in (0.5, 0.75)}


def test_normals_reproducible_and_distinct_streams():
    a = box_muller_normals(3, 0, 1001)
    assert a.shape == (1001,)
    assert np.array_equal(a, box_muller_normals(3, 0, 1001))
    assert not np.array_equal(a, box_muller_normals(3, 1, 1001))
    assert not np.array_equal(a, box_muller_normals(4, 0, 1001))
    # a prefix of a longer draw is the shorter draw
    assert np.array_equal(box_muller_normals(3, 0, 10), a[:10])


def test_normals_moments():
    z = box_muller_normals(11, 5, 200_000)
    assert abs(z.mean()) < 5 / math.sqrt(z.size)
    assert abs(z.var() - 1) < 5 * math.sqrt(2 / z.size)
    assert np.all(np.isfinite(z))


def test_normals_reject_negative_seed():
    with pytest.raises(ValueError):
        box_muller_normals(-1, 0, 4)


def test_brownian_modes_match_closed_form():
    lam, phi, n_nys = mode_table(0.5, 20, GRID)
    n = np.arange(1, 21)
    assert np.allclose(lam, 1 / ((n - 0.5) * math.pi) ** 2, rtol=1e-5)
    ref = math.sqrt(2) * np.sin(np.outer(GRID, (n - 0.5) * math.pi))
    sign = np.sign(np.sum(phi * ref, axis=0))
    assert np.max(np.abs(phi * sign - ref)) < 1e-3
    assert n_nys == 20


def test_truncated_trace():
    lam, _, _ = mode_table(0.75, 200, GRID)
    assert lam.sum() >= 0.999 / 2.5
    assert lam.sum() <= 1 / 2.5


def test_paths_start_at_zero_and_reproduce():
    a = kl_sample(0.75, 50, GRID, 20, seed=1)
    b = kl_sample(0.75, 50, GRID, 20, seed=1)
    c = kl_sample(0.75, 50, GRID, 20, seed=2)
    assert a.paths.shape == (20, GRID.size)
    assert np.all(a.paths[:, 0] == 0.0)
    assert np.array_equal(a.paths, b.paths)
    assert not np.array_equal(a.paths, c.paths)
    assert a.count == 20 and a.seed == 1 and a.n_modes == 50


def test_path_is_independent_of_count():
    a = kl_sample(0.75, 50, GRID, 5, seed=9)
    b = kl_sample(0.75, 50, GRID, 12, seed=9)
    assert np.array_equal(a.paths, b.paths[:5])


@pytest.mark.parametrize("H", [0.5, 0.75])
def test_empirical_covariance(big_samples, H):
    rep = empirical_cov_check(big_samples[H])
    assert rep.sufficient
    assert rep.z.shape == (5, 5)
    assert rep.max_z <= 4.0
    assert rep.variance_max_z <= 4.0


def test_terminal_variance(big_samples):
    s = big_samples[0.75]
    assert abs(np.mean(s.paths[:, -1] ** 2) - 1.0) <= 3 / math.sqrt(s.count)


def test_records_nystrom_boundary(big_samples):
    s = big_samples[0.75]
    assert 0 < s.n_nystrom <= s.n_modes
    assert s.eigenvalues.shape == (200,)
    assert np.all(np.diff(s.eigenvalues) < 0)


def test_single_path_flags_insufficient():
    rep = empirical_cov_check(kl_sample(0.75, 20, GRID, 1, seed=0))
    assert not rep.sufficient
    assert math.isnan(rep.max_z)


def test_sampler_rejects_bad_input():
    with pytest.raises(ValueError):
        kl_sample(0.75, 20, GRID, 0, seed=0)
    with pytest.raises(ValueError):
        kl_sample(0.75, 20, np.array([0.0, 1.5]), 3, seed=0)
    with pytest.raises(ValueError):
        kl_sample(1.2, 20, GRID, 3, seed=0)
    with pytest.raises(ResolutionError):
        kl_sample(0.75, 10_000, GRID, 3, seed=0, N=200)
