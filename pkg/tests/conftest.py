import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def sample_plane(rng, n, radius=3.0):
    """Uniform complex samples on a disc of the given radius."""
    r = radius * np.sqrt(rng.uniform(0, 1, n))
    a = rng.uniform(-np.pi, np.pi, n)
    return r * np.exp(1j * a)
