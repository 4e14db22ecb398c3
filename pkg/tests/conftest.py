import numpy as np
import pytest

from vedlab import Lattice


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


@pytest.fixture
def lat8():
    return Lattice(dim=2, n=8, period=2.0 * np.pi)


@pytest.fixture
def lat16():
    return Lattice(dim=2, n=16, period=2.0 * np.pi)


@pytest.fixture
def lat16_3d():
    return Lattice(dim=3, n=16, period=2.0 * np.pi)


@pytest.fixture
def lat32_3d():
    return Lattice(dim=3, n=32, period=2.0 * np.pi)


def random_real_field(lattice, rng, zero_mean=False):
    """Random smooth real field with a mild spectral decay."""
    from vedlab import dft_forward

    vals = rng.standard_normal(lattice.shape)
    f = dft_forward(vals, lattice)
    decay = 1.0 / (1.0 + (lattice.xi_mag / lattice.xi_min) ** 2)
    coeffs = f.coeffs * decay
    if zero_mean:
        coeffs[(0,) * lattice.dim] = 0.0
    from vedlab import SpectralField

    out = SpectralField(lattice, coeffs, True)
    # re-symmetrize through a physical round trip so hermitian is exact
    return dft_forward(out.physical(), lattice)
