import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=30)
settings.load_profile("default")


def random_spd(rng: np.random.Generator, d: int, cond: float = 10.0) -> np.ndarray:
    """SPD matrix with eigenvalues log-spaced in [1, cond]."""
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return (Q * np.geomspace(1.0, cond, d)) @ Q.T


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
