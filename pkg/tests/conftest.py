"""Shared fixtures: reference circuit models at several truncations.

The double-sweet-spot operating point below was located by the search in
fluxmol.sweetspot at the default cutoffs (N = 50, M = 39) and is frozen
here so coherence/gate/readout tests agree on one drive point.
"""

import numpy as np
import pytest

from fluxmol.circuit import table_params
from fluxmol.model import driven_model

# (A*, Omega*) of the double sweet spot at N = 50, M = 39
A_STAR = 0.23538102847223752
OMEGA_STAR = 1.5188130921757736


@pytest.fixture(scope="session")
def params():
    return table_params()


@pytest.fixture(scope="session")
def model4(params):
    return driven_model(params, N=4)


@pytest.fixture(scope="session")
def model8(params):
    return driven_model(params, N=8)


@pytest.fixture(scope="session")
def model12(params):
    return driven_model(params, N=12)


@pytest.fixture(scope="session")
def model30(params):
    return driven_model(params, N=30)


@pytest.fixture(scope="session")
def model50(params):
    return driven_model(params, N=50)


@pytest.fixture(scope="session")
def sol_star(model50):
    """Labeled solution at the frozen operating point, desk cutoffs."""
    return model50.solve(A_STAR, OMEGA_STAR, M=39)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
