import functools

import pytest

from fbmspec.nystrom import reference_spectrum
from fbmspec.operators import KernelSpec


@functools.lru_cache(maxsize=None)
def nystrom(model, H, N, n_max):
    return reference_spectrum(KernelSpec.for_model(model, H), N, n_max, strict=False)


@pytest.fixture(scope="session")
def spectra():
    return nystrom
