import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240711)


def random_dist(rng, d, alpha=1.0):
    """Random point on the simplex (Dirichlet)."""
    return rng.dirichlet(np.full(d, alpha))
