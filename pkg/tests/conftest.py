import numpy as np
import pytest

from fhnlab import model as fmodel
from fhnlab import wavetrain as fwt


@pytest.fixture(scope="session")
def classic_params():
    return fmodel.ModelParams(a=0.2, gamma=1.0, epsilon=1e-3)


@pytest.fixture(scope="session")
def classic_model(classic_params):
    return fmodel.classic_fhn(classic_params)


@pytest.fixture(scope="session")
def classic_sl(classic_model):
    return fmodel.singular_limit(classic_model, 2.0)


@pytest.fixture(scope="session")
def modified_model():
    params = fmodel.ModelParams(a=0.25, gamma=0.01, epsilon=0.002, r=0.998)
    return fmodel.modified_fhn(params)


@pytest.fixture(scope="session")
def wt_2e3():
    """Phase wave at eps=2e-3, c=2 on a stretched 1024-point grid."""
    m = fmodel.classic_fhn(fmodel.ModelParams(a=0.2, gamma=1.0, epsilon=2e-3))
    return fwt.wavetrain_at(m, 2.0, 2e-3, n=1024)


@pytest.fixture(scope="session")
def wt_small_uniform():
    """Phase wave at eps=5e-3, c=2 on a uniform 512-point grid (fast eigs)."""
    m = fmodel.classic_fhn(fmodel.ModelParams(a=0.2, gamma=1.0, epsilon=5e-3))
    return fwt.wavetrain_at(m, 2.0, 5e-3, n=512, stretched=False)


@pytest.fixture(scope="session")
def wt_2e3_n512():
    """Phase wave at eps=2e-3 on a stretched 512-point grid (fast eigs)."""
    m = fmodel.classic_fhn(fmodel.ModelParams(a=0.2, gamma=1.0, epsilon=2e-3))
    return fwt.wavetrain_at(m, 2.0, 2e-3, n=512)
