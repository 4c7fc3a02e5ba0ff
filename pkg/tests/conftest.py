import numpy as np
import pytest

from kerrlep import TruncatedSpace, cat_basis_params, reference_params


@pytest.fixture(scope="session")
def params():
    return reference_params()


@pytest.fixture(scope="session")
def cat(params):
    return cat_basis_params(params)


@pytest.fixture(scope="session")
def space30():
    return TruncatedSpace(30)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260808)
