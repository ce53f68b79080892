import numpy as np
import pytest

from landaulab import ModelParams, VelocityGrid, build_kernels, make_maxwellian

_TABLE_CACHE = {}


def cached_tables(half_width, n, gamma, quadrature="spectral"):
    """Kernel tables are expensive; share them across tests."""
    key = (float(half_width), int(n), float(gamma), quadrature)
    if key not in _TABLE_CACHE:
        grid = VelocityGrid(half_width, n)
        _TABLE_CACHE[key] = build_kernels(grid, ModelParams(gamma), quadrature=quadrature)
    return _TABLE_CACHE[key]


@pytest.fixture(scope="session")
def grid32():
    return VelocityGrid(8.0, 32)


@pytest.fixture(scope="session")
def grid16():
    return VelocityGrid(8.0, 16)


@pytest.fixture(scope="session")
def maxwellian32(grid32):
    return make_maxwellian(grid32)


@pytest.fixture(scope="session")
def tables32_coulomb():
    return cached_tables(8.0, 32, -3.0)


@pytest.fixture(scope="session")
def tables32_gm2():
    return cached_tables(8.0, 32, -2.0)


def radial_maxwellian_oracle(r, sigma, amplitude, temperature=1.0):
    """1-D reduction of amplitude * (|z|^sigma * M)(v), |v| = r, via quadrature."""
    from scipy.integrate import quad

    t = temperature

    def integrand(s):
        if sigma == -2.0:
            ang = (2 * np.pi / (r * s)) * np.log((r + s) / abs(r - s))
        elif sigma == 0.0:
            ang = 4 * np.pi
        else:
            ang = (2 * np.pi / (r * s)) * ((r + s) ** (sigma + 2)
                                           - abs(r - s) ** (sigma + 2)) / (sigma + 2)
        return s**2 * (2 * np.pi * t) ** -1.5 * np.exp(-(s**2) / (2 * t)) * ang

    val, _ = quad(integrand, 0, 30, points=[r], limit=300)
    return amplitude * val
