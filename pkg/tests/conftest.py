import numpy as np
import pytest

from fracplast import MaterialParams


@pytest.fixture
def rng():
    return np.random.default_rng(20260821)


@pytest.fixture
def ramp_params():
    """Desk-scaled monotone tension parameter set used across tests."""
    return MaterialParams(E_pseudo=50.0, beta_E=0.5, K_pseudo=10.0,
                          beta_K=0.5, H=0.0, tau_Y=1.0, S=1e-4, s_exp=1.0)
