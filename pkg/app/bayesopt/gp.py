"""Exact Gaussian process posterior with incremental Cholesky updates."""

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular

from app.core.exceptions import InputError, NumericalError

from .kernels import KernelSpec, cross_covariance, cross_covariance_grad, prior_variance

logger = logging.getLogger(__name__)

JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6)
REFACTOR_EVERY = 64
NEGATIVE_VARIANCE_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class GpPosterior:
    """Posterior of a zero-mean GP conditioned on noisy observations.

    Instances are immutable: `posterior_update` returns a new posterior.

    :param kernel: prior covariance.
    :param noise: observation noise variance tau.
    :param X: observed inputs, shape ``(n, d)``.
    :param Y: observed outputs, shape ``(n,)``.
    :param chol: lower Cholesky factor of ``K + (tau + jitter) I``.
    :param alpha: ``(K + (tau + jitter) I)^{-1} Y``.
    :param jitter: diagonal jitter that was needed to factorize.
    :param updates_since_refactor: number of rank-one border extensions applied since the last
        full factorization.
    """

    kernel: KernelSpec
    noise: float
    X: np.ndarray
    Y: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float = 0.0
    updates_since_refactor: int = 0

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int | None:
        return self.X.shape[1] if self.X.ndim == 2 and self.X.shape[1] > 0 else None

    def log_det(self) -> float:
        """``log det(K + tau I)`` from the Cholesky diagonal."""
        return 2.0 * float(np.sum(np.log(np.diag(self.chol)))) if self.n else 0.0


def _factorize(kernel: KernelSpec, noise: float, X: np.ndarray) -> tuple[np.ndarray, float]:
    K = cross_covariance(kernel, X, X)
    for jitter in JITTER_LADDER:
        try:
            chol = cholesky(K + (noise + jitter) * np.eye(X.shape[0]), lower=True, check_finite=False)
        except LinAlgError:
            logger.warning(f"Cholesky of {X.shape[0]}x{X.shape[0]} kernel matrix failed with jitter {jitter}")
            continue
        return chol, jitter
    raise NumericalError(f"kernel matrix of size {X.shape[0]} is not positive definite after jitter")


def _check_dim(gp: GpPosterior, X: np.ndarray) -> None:
    if gp.dim is not None and X.shape[1] != gp.dim:
        raise InputError(f"dimension mismatch: posterior has d={gp.dim}, query has d={X.shape[1]}")


def posterior_init(
    kernel: KernelSpec,
    noise: float,
    X0: np.ndarray | Sequence = (),
    Y0: np.ndarray | Sequence = (),
) -> GpPosterior:
    """Conditions the prior on an initial design.

    :param kernel: prior covariance.
    :param noise: observation noise variance, must be positive.
    :param X0: initial inputs, possibly empty.
    :param Y0: initial outputs.
    :return: `GpPosterior`.
    :raises NumericalError: if the kernel matrix cannot be factorized even with jitter.
    """
    if noise <= 0:
        raise InputError("noise variance must be positive")
    X = np.asarray(X0, dtype=float)
    Y = np.asarray(Y0, dtype=float).reshape(-1)
    if X.size == 0:
        dim = kernel.ard_dim or 0
        return GpPosterior(
            kernel=kernel,
            noise=float(noise),
            X=np.empty((0, dim)),
            Y=np.empty(0),
            chol=np.empty((0, 0)),
            alpha=np.empty(0),
        )
    X = np.atleast_2d(X)
    if X.shape[0] != Y.shape[0]:
        raise InputError(f"got {X.shape[0]} inputs but {Y.shape[0]} outputs")
    chol, jitter = _factorize(kernel, noise, X)
    alpha = cho_solve((chol, True), Y, check_finite=False)
    return GpPosterior(kernel=kernel, noise=float(noise), X=X, Y=Y, chol=chol, alpha=alpha, jitter=jitter)


def _clamp_variance(var: np.ndarray) -> np.ndarray:
    if np.any(var < -NEGATIVE_VARIANCE_TOLERANCE):
        raise NumericalError(f"posterior variance {var.min():.3e} is below -{NEGATIVE_VARIANCE_TOLERANCE}")
    return np.maximum(var, 0.0)


def posterior_mean_var_batch(gp: GpPosterior, X: np.ndarray | Sequence) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means and variances of a batch of points, each of shape ``(m,)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _check_dim(gp, X)
    prior_var = prior_variance(gp.kernel, X)
    if gp.n == 0:
        return np.zeros(X.shape[0]), prior_var
    Kxq = cross_covariance(gp.kernel, gp.X, X)
    mean = Kxq.T @ gp.alpha
    V = solve_triangular(gp.chol, Kxq, lower=True, check_finite=False)
    var = prior_var - np.einsum("ij,ij->j", V, V)
    return mean, _clamp_variance(var)


def posterior_mean_var(gp: GpPosterior, x: np.ndarray | Sequence) -> tuple[float, float]:
    """Posterior mean and variance ``(mu_{t-1}(x), sigma^2_{t-1}(x))`` of a single point."""
    mean, var = posterior_mean_var_batch(gp, np.asarray(x, dtype=float)[None, :])
    return float(mean[0]), float(var[0])


def posterior_covariance(gp: GpPosterior, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean vector and full covariance matrix over a point set."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _check_dim(gp, X)
    prior = cross_covariance(gp.kernel, X, X)
    if gp.n == 0:
        return np.zeros(X.shape[0]), prior
    Kxq = cross_covariance(gp.kernel, gp.X, X)
    V = solve_triangular(gp.chol, Kxq, lower=True, check_finite=False)
    return Kxq.T @ gp.alpha, prior - V.T @ V


def posterior_gradients(gp: GpPosterior, x: np.ndarray | Sequence) -> tuple[float, float, np.ndarray, np.ndarray]:
    """Mean, standard deviation and their gradients at a single point.

    The standard-deviation gradient is set to zero where the standard deviation vanishes.

    :return: ``(mean, std, dmean/dx, dstd/dx)``.
    """
    x = np.asarray(x, dtype=float)
    mean, var = posterior_mean_var(gp, x)
    std = float(np.sqrt(var))
    if gp.n == 0:
        zeros = np.zeros_like(x)
        return mean, std, zeros, zeros.copy()
    dK = cross_covariance_grad(gp.kernel, x, gp.X)
    k = cross_covariance(gp.kernel, gp.X, x)[:, 0]
    dmean = dK.T @ gp.alpha
    if std == 0.0:
        return mean, std, dmean, np.zeros_like(x)
    dstd = -(dK.T @ cho_solve((gp.chol, True), k, check_finite=False)) / std
    return mean, std, dmean, dstd


def posterior_update(gp: GpPosterior, x_new: np.ndarray | Sequence, y_new: float) -> GpPosterior:
    """Conditions the posterior on one more observation.

    The Cholesky factor is extended by one border row. Every `REFACTOR_EVERY` updates, or when
    the border pivot is not positive, the factor is recomputed from scratch instead.
    """
    x_new = np.asarray(x_new, dtype=float).reshape(1, -1)
    if gp.n == 0:
        return posterior_init(gp.kernel, gp.noise, x_new, [y_new])
    _check_dim(gp, x_new)
    X = np.vstack([gp.X, x_new])
    Y = np.append(gp.Y, float(y_new))

    if gp.updates_since_refactor + 1 >= REFACTOR_EVERY:
        logger.debug(f"Refactorizing posterior with {X.shape[0]} observations")
        return posterior_init(gp.kernel, gp.noise, X, Y)

    k = cross_covariance(gp.kernel, gp.X, x_new)[:, 0]
    c = gp.kernel.output_scale + gp.noise + gp.jitter
    border = solve_triangular(gp.chol, k, lower=True, check_finite=False)
    pivot = c - border @ border
    if pivot <= 0.0:
        logger.warning("Rank-one Cholesky extension unstable, reverting to a full factorization")
        return posterior_init(gp.kernel, gp.noise, X, Y)

    n = gp.n
    chol = np.zeros((n + 1, n + 1))
    chol[:n, :n] = gp.chol
    chol[n, :n] = border
    chol[n, n] = np.sqrt(pivot)
    alpha = cho_solve((chol, True), Y, check_finite=False)
    return GpPosterior(
        kernel=gp.kernel,
        noise=gp.noise,
        X=X,
        Y=Y,
        chol=chol,
        alpha=alpha,
        jitter=gp.jitter,
        updates_since_refactor=gp.updates_since_refactor + 1,
    )


def _factorize_covariance(cov: np.ndarray) -> np.ndarray:
    scale = float(np.mean(np.diag(cov)))
    for jitter in JITTER_LADDER:
        try:
            return cholesky(cov + jitter * scale * np.eye(cov.shape[0]), lower=True, check_finite=False)
        except LinAlgError:
            logger.debug(f"Grid covariance factorization failed with relative jitter {jitter}")
    raise NumericalError(f"grid covariance of size {cov.shape[0]} is not positive definite after jitter")


def sample_on_grid(
    gp: GpPosterior,
    grid: np.ndarray,
    scale_fn: Callable[[np.ndarray], np.ndarray],
    rng: np.random.Generator,
    size: int | None = None,
) -> np.ndarray:
    """Draws a joint sample of the rescaled posterior over a finite grid.

    The draw has mean ``mu_{t-1}(grid)`` and covariance ``D Corr D`` where ``Corr`` is the
    posterior correlation matrix of the grid and ``D = diag(scale_fn(grid))``. Grid points with
    zero posterior standard deviation or zero scale keep their posterior mean exactly.

    :param gp: posterior to sample from.
    :param grid: grid points, shape ``(m, d)``.
    :param scale_fn: maps the grid to nonnegative per-point standard deviations.
    :param rng: random stream owned by the caller.
    :param size: number of independent draws; ``None`` returns a single vector.
    :return: array of shape ``(m,)`` or ``(size, m)``.
    :raises NumericalError: if the grid covariance cannot be factorized.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.shape[0] == 0:
        raise InputError("grid must be nonempty")
    mean, cov = posterior_covariance(gp, grid)
    scale = np.asarray(scale_fn(grid), dtype=float).reshape(-1)
    if np.any(scale < 0):
        raise InputError("scale_fn must be nonnegative")

    std = np.sqrt(np.maximum(np.diag(cov), 0.0))
    active = np.flatnonzero((std > 0.0) & (scale > 0.0))
    n_draws = 1 if size is None else size
    draws = np.tile(mean, (n_draws, 1))
    if active.size:
        sub_std = std[active]
        corr = cov[np.ix_(active, active)] / np.outer(sub_std, sub_std)
        target = corr * np.outer(scale[active], scale[active])
        chol = _factorize_covariance(target)
        z = rng.standard_normal((n_draws, active.size))
        draws[:, active] += z @ chol.T
    return draws[0] if size is None else draws


def information_gain(gp: GpPosterior) -> float:
    """Realized information gain ``1/2 log det(I + K / tau)`` of the posterior's data."""
    return 0.5 * (gp.log_det() - gp.n * np.log(gp.noise))


__all__ = [
    "JITTER_LADDER",
    "REFACTOR_EVERY",
    "GpPosterior",
    "information_gain",
    "posterior_covariance",
    "posterior_gradients",
    "posterior_init",
    "posterior_mean_var",
    "posterior_mean_var_batch",
    "posterior_update",
    "sample_on_grid",
]
