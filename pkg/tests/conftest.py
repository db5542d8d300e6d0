import numpy as np
import pytest

from optising.ising import IsingModel


def random_symmetric_model(n: int, rng: np.random.Generator, low=-1.0, high=1.0) -> IsingModel:
    """Random symmetric zero-diagonal coupling matrix with U(low, high) couplings."""
    J = np.zeros((n, n))
    upper = rng.uniform(low, high, size=(n, n))
    iu = np.triu_indices(n, k=1)
    J[iu] = upper[iu]
    J = J + J.T
    return IsingModel(J)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
