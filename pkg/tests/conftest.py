import numpy as np
import pytest

from fraclab.geometry import (DiskDomain, SampleConfig, comb_domain, koch_prefractal,
                              unit_square)


@pytest.fixture(scope="session")
def cfg():
    return SampleConfig(seed=0, samples=20_000)


@pytest.fixture(scope="session")
def cfg_mid():
    return SampleConfig(seed=0, samples=200_000)


@pytest.fixture(scope="session")
def disk():
    return DiskDomain()


@pytest.fixture(scope="session")
def square():
    return unit_square()


@pytest.fixture(scope="session")
def koch3():
    return koch_prefractal(3)


@pytest.fixture(scope="session")
def koch7():
    return koch_prefractal(7)


@pytest.fixture(scope="session")
def comb8():
    return comb_domain(8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
