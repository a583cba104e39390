"""Stationary covariance functions and their Gram matrices.

Only the squared-exponential kernel and the half-integer Matern kernels
(nu = 3/2, 5/2, 7/2) are supported, each through its closed form. All kernels
are written in terms of the scaled distance ``r = ||(x - y) / lengthscale||``.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from app.core.exceptions import InputError

from .choices import KernelFamilyChoices

SUPPORTED_MATERN_NU = (1.5, 2.5, 3.5)
# Smoothness below which the regret analysis does not apply.
THEORY_MIN_NU = 2.0
DEFAULT_LENGTHSCALE_FRACTION = 0.2


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and fixed hyperparameters.

    :param family: kernel family.
    :param lengthscale: isotropic lengthscale, or one lengthscale per input dimension.
    :param nu: Matern smoothness, one of 3/2, 5/2 or 7/2. Ignored by the squared exponential.
    :param output_scale: prior variance ``k(x, x)``.
    """

    family: KernelFamilyChoices = KernelFamilyChoices.MATERN
    lengthscale: float | tuple[float, ...] = 1.0
    nu: float | None = 2.5
    output_scale: float = 1.0

    def __post_init__(self) -> None:
        lengthscale = self.lengthscale
        if isinstance(lengthscale, Sequence | np.ndarray):
            lengthscale = tuple(float(v) for v in lengthscale)
            if not lengthscale or min(lengthscale) <= 0:
                raise InputError("lengthscales must be positive")
        else:
            lengthscale = float(lengthscale)
            if lengthscale <= 0:
                raise InputError("lengthscale must be positive")
        object.__setattr__(self, "lengthscale", lengthscale)

        if self.output_scale <= 0:
            raise InputError("output_scale must be positive")

        if self.family == KernelFamilyChoices.MATERN:
            if self.nu is None or float(self.nu) not in SUPPORTED_MATERN_NU:
                raise InputError(f"Matern smoothness must be one of {SUPPORTED_MATERN_NU}, got {self.nu}")
            object.__setattr__(self, "nu", float(self.nu))
        else:
            object.__setattr__(self, "nu", None)

    @property
    def within_theory(self) -> bool:
        """Whether the regret analysis covers this kernel (squared exponential, or Matern nu >= 2)."""
        return self.family == KernelFamilyChoices.SQUARED_EXPONENTIAL or (
            self.nu is not None and self.nu >= THEORY_MIN_NU
        )

    @property
    def ard_dim(self) -> int | None:
        """Input dimension pinned by per-dimension lengthscales, if any."""
        return len(self.lengthscale) if isinstance(self.lengthscale, tuple) else None

    def lengthscale_array(self, dim: int) -> np.ndarray:
        if isinstance(self.lengthscale, tuple):
            if len(self.lengthscale) != dim:
                raise InputError(
                    f"kernel has {len(self.lengthscale)} lengthscales but inputs have dimension {dim}"
                )
            return np.asarray(self.lengthscale)
        return np.full(dim, self.lengthscale)

    def as_dict(self) -> dict[str, object]:
        return {
            "family": str(self.family),
            "lengthscale": list(self.lengthscale) if isinstance(self.lengthscale, tuple) else self.lengthscale,
            "nu": self.nu,
            "output_scale": self.output_scale,
            "within_theory": self.within_theory,
        }


def default_lengthscale(widths: Sequence[float] | np.ndarray) -> float:
    """Default isotropic lengthscale: a fifth of the mean side length of the search box."""
    return DEFAULT_LENGTHSCALE_FRACTION * float(np.mean(widths))


def _as_points(points: np.ndarray | Sequence, name: str) -> np.ndarray:
    array = np.asarray(points, dtype=float)
    if array.ndim == 1:
        array = array[None, :]
    if array.ndim != 2:
        raise InputError(f"{name} must be a point or a 2-D array of points")
    return array


def _profile(spec: KernelSpec, r2: np.ndarray) -> np.ndarray:
    """Kernel value as a function of the squared scaled distance."""
    if spec.family == KernelFamilyChoices.SQUARED_EXPONENTIAL:
        return spec.output_scale * np.exp(-0.5 * r2)

    r = np.sqrt(r2)
    if spec.nu == 1.5:
        a = math.sqrt(3.0) * r
        poly = 1.0 + a
    elif spec.nu == 2.5:
        a = math.sqrt(5.0) * r
        poly = 1.0 + a + 5.0 * r2 / 3.0
    else:
        a = math.sqrt(7.0) * r
        poly = 1.0 + a + 14.0 * r2 / 5.0 + 7.0 * math.sqrt(7.0) * r2 * r / 15.0
    return spec.output_scale * poly * np.exp(-a)


def _gradient_factor(spec: KernelSpec, r2: np.ndarray) -> np.ndarray:
    """``(dk/dr) / r``, finite at r = 0 for every supported family."""
    if spec.family == KernelFamilyChoices.SQUARED_EXPONENTIAL:
        return -spec.output_scale * np.exp(-0.5 * r2)

    r = np.sqrt(r2)
    if spec.nu == 1.5:
        return -3.0 * spec.output_scale * np.exp(-math.sqrt(3.0) * r)
    if spec.nu == 2.5:
        root5 = math.sqrt(5.0)
        return -(5.0 / 3.0) * spec.output_scale * (1.0 + root5 * r) * np.exp(-root5 * r)
    root7 = math.sqrt(7.0)
    return -(7.0 / 15.0) * spec.output_scale * (3.0 + 3.0 * root7 * r + 7.0 * r2) * np.exp(-root7 * r)


def _scaled_sqdist(spec: KernelSpec, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    if X.shape[1] != Y.shape[1]:
        raise InputError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    lengthscale = spec.lengthscale_array(X.shape[1])
    return cdist(X / lengthscale, Y / lengthscale, metric="sqeuclidean")


def cross_covariance(spec: KernelSpec, X: np.ndarray | Sequence, Y: np.ndarray | Sequence) -> np.ndarray:
    """Returns the matrix ``[k(x_i, y_j)]`` of shape ``(len(X), len(Y))``."""
    X = _as_points(X, "X")
    Y = _as_points(Y, "Y")
    return _profile(spec, _scaled_sqdist(spec, X, Y))


def cross_covariance_grad(spec: KernelSpec, x: np.ndarray | Sequence, Y: np.ndarray | Sequence) -> np.ndarray:
    """Returns ``[dk(x, y_j)/dx]`` of shape ``(len(Y), d)``."""
    x = np.asarray(x, dtype=float)
    Y = _as_points(Y, "Y")
    if x.ndim != 1:
        raise InputError("x must be a single point")
    r2 = _scaled_sqdist(spec, x[None, :], Y)[0]
    lengthscale = spec.lengthscale_array(x.shape[0])
    return _gradient_factor(spec, r2)[:, None] * (x[None, :] - Y) / lengthscale**2


def kernel_eval(spec: KernelSpec, x: np.ndarray | Sequence, y: np.ndarray | Sequence) -> float:
    """Evaluates ``k(x, y)``.

    :raises InputError: if `x` and `y` have different dimensions.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise InputError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(cross_covariance(spec, x, y)[0, 0])


def kernel_grad(spec: KernelSpec, x: np.ndarray | Sequence, y: np.ndarray | Sequence) -> np.ndarray:
    """Evaluates the gradient ``dk(x, y)/dx``; the zero vector when ``x == y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise InputError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return cross_covariance_grad(spec, x, y[None, :])[0]


def gram_matrix(spec: KernelSpec, X: np.ndarray | Sequence) -> np.ndarray:
    """Returns the Gram matrix ``K = [k(x_i, x_j)]`` of a nonempty point set."""
    X = _as_points(X, "X")
    if X.shape[0] == 0:
        raise InputError("gram matrix needs at least one point")
    return cross_covariance(spec, X, X)


def prior_variance(spec: KernelSpec, X: np.ndarray) -> np.ndarray:
    """Diagonal ``k(x, x)`` of a batch of points."""
    return np.full(np.asarray(X).shape[0], spec.output_scale)


__all__ = [
    "DEFAULT_LENGTHSCALE_FRACTION",
    "SUPPORTED_MATERN_NU",
    "KernelSpec",
    "cross_covariance",
    "cross_covariance_grad",
    "default_lengthscale",
    "gram_matrix",
    "kernel_eval",
    "kernel_grad",
    "prior_variance",
]
