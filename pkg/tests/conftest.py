import numpy as np
import pytest

from coupled_mzi import InterferometerConfig, qpc_from_transmission


def balanced_mzi(phi: float) -> InterferometerConfig:
    q = qpc_from_transmission(0.5)
    return InterferometerConfig(q, q, phi)


def random_mzi(rng: np.random.Generator, t_lo: float = 0.02, t_hi: float = 0.98) -> InterferometerConfig:
    q1 = qpc_from_transmission(rng.uniform(t_lo, t_hi), chi=rng.uniform(0, 2 * np.pi), xi=rng.uniform(0, 2 * np.pi))
    q2 = qpc_from_transmission(rng.uniform(t_lo, t_hi), chi=rng.uniform(0, 2 * np.pi), xi=rng.uniform(0, 2 * np.pi))
    return InterferometerConfig(q1, q2, rng.uniform(-2 * np.pi, 2 * np.pi))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
