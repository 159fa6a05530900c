import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_pure(rng, levels, dim):
    z = rng.normal(size=levels) + 1j * rng.normal(size=levels)
    z /= np.linalg.norm(z)
    psi = np.zeros(dim, dtype=complex)
    psi[:levels] = z
    return np.outer(psi, psi.conj())


def random_mixed(rng, levels, dim, k=3):
    w = rng.dirichlet(np.ones(k))
    return sum(wi * random_pure(rng, levels, dim) for wi in w)
