import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stein_newton.ensemble import (
    GaussianSpec,
    NotPositiveDefiniteError,
    ParticleEnsemble,
    grad_check,
    init_ensemble,
    make_rngs,
)
from stein_newton.problems import GaussianTarget

from .conftest import random_spd


def test_positions_are_read_only_copies():
    X = np.zeros((3, 2))
    ens = ParticleEnsemble(X)
    X[0, 0] = 5.0
    assert ens.positions[0, 0] == 0.0
    with pytest.raises(ValueError):
        ens.positions[0, 0] = 1.0


def test_advance_increments_iteration():
    ens = ParticleEnsemble(np.zeros((2, 2)), iteration=4)
    nxt = ens.advance(np.ones((2, 2)))
    assert nxt.iteration == 5 and ens.iteration == 4


def test_non_finite_particle_is_named():
    X = np.zeros((4, 2))
    X[2, 1] = np.nan
    with pytest.raises(ValueError, match="particle 2"):
        ParticleEnsemble(X)


def test_one_dimensional_input_becomes_column():
    assert ParticleEnsemble(np.arange(3.0)).positions.shape == (3, 1)


def test_rng_streams_are_independent_and_reproducible():
    a1, b1 = make_rngs(7)
    a2, b2 = make_rngs(7)
    assert a1.standard_normal() == a2.standard_normal()
    assert b1.standard_normal() == b2.standard_normal()
    a, b = make_rngs(7)
    assert a.standard_normal() != b.standard_normal()


def test_init_ensemble_moments():
    rng = np.random.default_rng(0)
    cov = random_spd(rng, 3)
    prior = GaussianSpec(np.array([1.0, -2.0, 0.5]), cov)
    ens = init_ensemble(prior, 20000, np.random.default_rng(1))
    np.testing.assert_allclose(ens.positions.mean(axis=0), prior.mean, atol=0.1)
    np.testing.assert_allclose(np.cov(ens.positions.T), cov, atol=0.3)
    assert ens.iteration == 0


def test_init_ensemble_reports_failing_minor():
    cov = np.array([[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    with pytest.raises(NotPositiveDefiniteError, match="order 2"):
        init_ensemble(GaussianSpec(np.zeros(3), cov), 5, np.random.default_rng(0))


def test_gaussian_spec_shape_mismatch():
    with pytest.raises(ValueError):
        GaussianSpec(np.zeros(2), np.eye(3))


@given(seed=st.integers(0, 2**31), d=st.integers(1, 6))
def test_grad_check_gaussian(seed, d):
    rng = np.random.default_rng(seed)
    model = GaussianTarget(rng.standard_normal(d), random_spd(rng, d))
    assert grad_check(model, rng.standard_normal(d)) <= 1e-5


def test_grad_check_flags_wrong_gradient():
    class Wrong(GaussianTarget):
        def grad_log_density(self, x):
            return super().grad_log_density(x) + 1.0

    model = Wrong(np.zeros(2), np.eye(2))
    assert grad_check(model, np.ones(2)) > 0.1


def test_grad_check_non_finite_stencil():
    class Bad(GaussianTarget):
        def log_density(self, x):
            out = super().log_density(x)
            out[0] = np.inf
            return out

    with pytest.raises(FloatingPointError):
        grad_check(Bad(np.zeros(2), np.eye(2)), np.zeros(2))
