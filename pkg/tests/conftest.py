import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from skewbif.basejulia import sample_julia, sample_mu_p
from skewbif.dynamics import BaseQuadratic, SkewParams


@pytest.fixture(scope="session")
def base0():
    return BaseQuadratic(0)


@pytest.fixture(scope="session")
def base_cheb():
    return BaseQuadratic(-2)


@pytest.fixture(scope="session")
def julia0(base0):
    return sample_julia(base0, 256, seed=1)


@pytest.fixture(scope="session")
def julia_cheb(base_cheb):
    return sample_julia(base_cheb, 256, seed=1)


@pytest.fixture(scope="session")
def mu0(base0):
    return sample_mu_p(base0, 20000, seed=3)


@pytest.fixture(scope="session")
def mu_cheb(base_cheb):
    return sample_mu_p(base_cheb, 20000, seed=3)


def params(a, b, c, base):
    return SkewParams(a, b, c, base)
