"""Tests Gaussian process posteriors."""

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from app.bayesopt.choices import KernelFamilyChoices
from app.bayesopt.gp import (
    REFACTOR_EVERY,
    information_gain,
    posterior_covariance,
    posterior_gradients,
    posterior_init,
    posterior_mean_var,
    posterior_mean_var_batch,
    posterior_update,
    sample_on_grid,
)
from app.bayesopt.kernels import gram_matrix
from app.core.exceptions import InputError

unit_points = arrays(np.float64, (4, 2), elements=st.floats(min_value=0.0, max_value=1.0))


def test_prior_posterior(create_kernel) -> None:
    """Tests that an empty design gives the prior."""
    gp = posterior_init(create_kernel(output_scale=2.0), 0.01)

    assert posterior_mean_var(gp, [0.3, 0.4]) == (0.0, 2.0)


def test_single_observation(create_kernel) -> None:
    """Tests the 1x1 posterior against the hand computation."""
    kernel = create_kernel(family=KernelFamilyChoices.SQUARED_EXPONENTIAL, lengthscale=1.0)
    gp = posterior_init(kernel, 0.01, [[0.2, 0.2]], [2.0])

    mean, var = posterior_mean_var(gp, [0.2, 0.2])

    assert mean == pytest.approx(2.0 / 1.01, rel=1e-12)
    assert var == pytest.approx(1.0 - 1.0 / 1.01, rel=1e-9)


def test_posterior_matches_dense_inverse(create_kernel) -> None:
    """Tests the posterior against an explicit matrix inverse."""
    kernel = create_kernel(family=KernelFamilyChoices.SQUARED_EXPONENTIAL, lengthscale=0.5)
    rng = np.random.default_rng(1)
    X, Y, x = rng.random((3, 2)), rng.standard_normal(3), rng.random(2)
    gp = posterior_init(kernel, 0.1, X, Y)

    inverse = np.linalg.inv(gram_matrix(kernel, X) + 0.1 * np.eye(3))
    k = np.array([np.exp(-0.5 * np.sum((x - xi) ** 2) / 0.25) for xi in X])
    mean, var = posterior_mean_var(gp, x)

    assert mean == pytest.approx(k @ inverse @ Y, abs=1e-8)
    assert var == pytest.approx(1.0 - k @ inverse @ k, abs=1e-8)


def test_interpolation_limit(create_posterior) -> None:
    """Tests that the mean interpolates observations when the noise is tiny."""
    gp = create_posterior(noise=1e-8)

    mean, var = posterior_mean_var_batch(gp, gp.X)

    np.testing.assert_allclose(mean, gp.Y, atol=1e-4)
    assert var.max() < 1e-4


def test_noise_must_be_positive(create_kernel) -> None:
    """Tests that a nonpositive noise variance is rejected."""
    with pytest.raises(InputError):
        posterior_init(create_kernel(), 0.0)


def test_update_from_empty_matches_init(create_kernel) -> None:
    """Tests that updating the prior equals conditioning on one point."""
    kernel = create_kernel()
    updated = posterior_update(posterior_init(kernel, 0.01), [0.1, 0.9], 1.5)
    direct = posterior_init(kernel, 0.01, [[0.1, 0.9]], [1.5])

    assert posterior_mean_var(updated, [0.4, 0.4]) == pytest.approx(posterior_mean_var(direct, [0.4, 0.4]))


def test_incremental_updates_match_refit(create_kernel) -> None:
    """Tests that border extensions, including periodic refactorizations, match a fresh fit."""
    kernel = create_kernel()
    rng = np.random.default_rng(2)
    X = rng.random((REFACTOR_EVERY + 6, 2))
    Y = np.cos(4.0 * X).sum(axis=1)
    gp = posterior_init(kernel, 1e-3, X[:2], Y[:2])
    for x, y in zip(X[2:], Y[2:], strict=True):
        gp = posterior_update(gp, x, y)
    refit = posterior_init(kernel, 1e-3, X, Y)
    queries = rng.random((20, 2))

    mean, var = posterior_mean_var_batch(gp, queries)
    expected_mean, expected_var = posterior_mean_var_batch(refit, queries)

    np.testing.assert_allclose(mean, expected_mean, atol=1e-8)
    np.testing.assert_allclose(var, expected_var, atol=1e-8)
    assert gp.updates_since_refactor < REFACTOR_EVERY


@pytest.mark.parametrize(
    "family, nu",
    [
        (KernelFamilyChoices.SQUARED_EXPONENTIAL, 2.5),
        (KernelFamilyChoices.MATERN, 1.5),
        (KernelFamilyChoices.MATERN, 2.5),
    ],
)
@pytest.mark.parametrize("n, dim", [(2, 1), (40, 1), (40, 6), (REFACTOR_EVERY + 6, 3)])
def test_incremental_updates_match_refit_across_kernels(create_kernel, family, nu, n, dim) -> None:
    """Tests that a chain of single-point updates matches a fresh fit for every kernel family."""
    kernel = create_kernel(family=family, nu=nu)
    rng = np.random.default_rng(n + dim)
    X = rng.random((n, dim))
    Y = np.sin(5.0 * X).sum(axis=1)
    gp = posterior_init(kernel, 1e-2, X[:1], Y[:1])
    for x, y in zip(X[1:], Y[1:], strict=True):
        gp = posterior_update(gp, x, y)
    refit = posterior_init(kernel, 1e-2, X, Y)
    queries = np.vstack([rng.random((25, dim)), X[-3:]])

    mean, var = posterior_mean_var_batch(gp, queries)
    expected_mean, expected_var = posterior_mean_var_batch(refit, queries)

    assert gp.n == n
    np.testing.assert_allclose(mean, expected_mean, rtol=1e-7, atol=1e-8)
    np.testing.assert_allclose(var, expected_var, atol=1e-8)


@settings(suppress_health_check=[HealthCheck.function_scoped_fixture], deadline=None)
@given(
    new_points=arrays(np.float64, (5, 2), elements=st.floats(min_value=0.0, max_value=1.0)),
    queries=unit_points,
)
def test_variance_never_increases_with_data(create_posterior, new_points: np.ndarray, queries: np.ndarray) -> None:
    """Tests that every observation leaves the posterior variance nowhere larger."""
    gp = create_posterior(n=6)
    _, previous = posterior_mean_var_batch(gp, queries)

    for x in new_points:
        gp = posterior_update(gp, x, float(np.sin(3.0 * x).sum()))
        _, current = posterior_mean_var_batch(gp, queries)

        assert np.all(current <= previous + 1e-12)
        previous = current


def test_duplicate_observation_shrinks_variance(create_kernel) -> None:
    """Tests that observing the same point twice strictly reduces its variance."""
    gp = posterior_init(create_kernel(), 0.1, [[0.5, 0.5]], [1.0])
    _, before = posterior_mean_var(gp, [0.5, 0.5])
    _, after = posterior_mean_var(posterior_update(gp, [0.5, 0.5], 1.0), [0.5, 0.5])

    assert after < before


def test_dimension_mismatch(create_posterior) -> None:
    """Tests that queries of the wrong dimension are rejected."""
    with pytest.raises(InputError):
        posterior_mean_var(create_posterior(dim=2), [0.1, 0.2, 0.3])


@settings(suppress_health_check=[HealthCheck.function_scoped_fixture], deadline=None)
@given(queries=unit_points)
def test_variance_bounds(create_posterior, queries: np.ndarray) -> None:
    """Tests that posterior variances lie between zero and the prior variance."""
    gp = create_posterior(n=10)

    _, var = posterior_mean_var_batch(gp, queries)

    assert np.all(var >= 0.0)
    assert np.all(var <= gp.kernel.output_scale + 1e-12)


def test_covariance_diagonal_matches_variances(create_posterior) -> None:
    """Tests that the joint covariance agrees with the marginal variances."""
    gp = create_posterior()
    grid = np.random.default_rng(3).random((6, 2))

    mean, cov = posterior_covariance(gp, grid)
    expected_mean, expected_var = posterior_mean_var_batch(gp, grid)

    np.testing.assert_allclose(mean, expected_mean)
    np.testing.assert_allclose(np.diag(cov), expected_var, atol=1e-12)


def test_gradients_match_finite_differences(create_posterior) -> None:
    """Tests the mean and standard deviation gradients against central differences."""
    gp = create_posterior(n=6)
    x = np.array([0.37, 0.61])
    h = 1e-6

    _, _, dmean, dstd = posterior_gradients(gp, x)

    def mean_std(point: np.ndarray) -> np.ndarray:
        mean, var = posterior_mean_var(gp, point)
        return np.array([mean, np.sqrt(var)])

    numeric = np.array([(mean_std(x + h * e) - mean_std(x - h * e)) / (2 * h) for e in np.eye(2)])
    np.testing.assert_allclose(dmean, numeric[:, 0], atol=1e-5)
    np.testing.assert_allclose(dstd, numeric[:, 1], atol=1e-5)


def test_sample_with_zero_scale_is_the_mean(create_posterior) -> None:
    """Tests that a zero scale returns the posterior mean exactly."""
    gp = create_posterior()
    grid = np.random.default_rng(4).random((5, 2))

    draw = sample_on_grid(gp, grid, lambda points: np.zeros(len(points)), np.random.default_rng(0))

    np.testing.assert_array_equal(draw, posterior_mean_var_batch(gp, grid)[0])


def test_prior_sample_moments(create_kernel) -> None:
    """Tests that prior draws at one point are standard normal."""
    gp = posterior_init(create_kernel(), 0.01)

    def ones(points):
        return np.ones(len(points))

    draws = sample_on_grid(gp, [[0.5, 0.5]], ones, np.random.default_rng(5), size=100_000)

    assert draws.mean() == pytest.approx(0.0, abs=0.02)
    assert draws.var() == pytest.approx(1.0, abs=0.02)


def test_sample_seed_determinism(create_posterior) -> None:
    """Tests that identical streams give bit-identical samples."""
    gp = create_posterior()
    grid = np.random.default_rng(6).random((8, 2))

    def scale(points: np.ndarray) -> np.ndarray:
        return np.ones(len(points))

    first = sample_on_grid(gp, grid, scale, np.random.default_rng(11))
    second = sample_on_grid(gp, grid, scale, np.random.default_rng(11))

    np.testing.assert_array_equal(first, second)


def test_information_gain_of_one_point(create_kernel) -> None:
    """Tests that one observation with k(x, x) = tau = 1 has gain log(2) / 2."""
    gp = posterior_init(create_kernel(), 1.0, [[0.0, 0.0]], [0.3])

    assert information_gain(gp) == pytest.approx(0.5 * np.log(2.0))
