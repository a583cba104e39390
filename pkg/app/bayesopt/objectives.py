"""Benchmark objectives in maximization form, and the observation noise model.

Classical benchmarks are minimization problems; every function here is negated so that the
engine always maximizes.
"""

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from app.core.exceptions import InputError

from .choices import NoiseKindChoices, ObjectiveChoices
from .domain import Box
from .kernels import KernelSpec, cross_covariance, cross_covariance_grad, default_lengthscale

logger = logging.getLogger(__name__)

DOMAIN_TOLERANCE = 1e-12
VALUE_RANGE_PROBE_LOG2 = 12
DEFAULT_NOISE_FRACTION = 0.01
SYNTHETIC_RKHS_DIM = 11


@dataclass(frozen=True, eq=False)
class ObjectiveSpec:
    """A test function with its domain and known optimum.

    :param name: benchmark identifier.
    :param domain: search box.
    :param function: vectorized maximization-form function, ``(m, d) -> (m,)``.
    :param f_star: global maximum.
    :param x_star: known maximizers.
    :param value_range: ``max f - min f`` estimated on a Sobol probe.
    :param sup_norm: ``sup |f|`` estimated on the same probe (and at the optimizers).
    """

    name: ObjectiveChoices
    domain: Box
    function: Callable[[np.ndarray], np.ndarray]
    f_star: float
    x_star: tuple[np.ndarray, ...]
    value_range: float = field(default=0.0)
    sup_norm: float = field(default=0.0)

    @property
    def dim(self) -> int:
        return self.domain.dim

    def metadata(self) -> dict[str, object]:
        return {
            "name": str(self.name),
            "dim": self.dim,
            "lower": list(self.domain.lower),
            "upper": list(self.domain.upper),
            "f_star": self.f_star,
            "x_star": [list(map(float, x)) for x in self.x_star],
            "value_range": self.value_range,
            "sup_norm": self.sup_norm,
        }


@dataclass(frozen=True)
class NoiseModel:
    """Observation noise ``y = f(x) + eps``; Gaussian noise of standard deviation R is R-sub-Gaussian."""

    kind: NoiseKindChoices = NoiseKindChoices.NONE
    R: float = 0.0

    def __post_init__(self) -> None:
        if self.R < 0:
            raise InputError("noise level R must be nonnegative")

    def as_dict(self) -> dict[str, object]:
        return {"kind": str(self.kind), "R": self.R}


def _batch(x: np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


def branin(x: np.ndarray) -> np.ndarray:
    x = _batch(x)
    x1, x2 = x[:, 0], x[:, 1]
    b = 5.1 / (4 * np.pi**2)
    c = 5 / np.pi
    t = 1 / (8 * np.pi)
    value = (x2 - b * x1**2 + c * x1 - 6) ** 2 + 10 * (1 - t) * np.cos(x1) + 10
    return -value


def rastrigin(x: np.ndarray) -> np.ndarray:
    x = _batch(x)
    value = 10 * x.shape[1] + np.sum(x**2 - 10 * np.cos(2 * np.pi * x), axis=1)
    return -value


_HARTMANN_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_HARTMANN3_A = np.array([[3.0, 10.0, 30.0], [0.1, 10.0, 35.0], [3.0, 10.0, 30.0], [0.1, 10.0, 35.0]])
_HARTMANN3_P = np.array(
    [
        [0.3689, 0.1170, 0.2673],
        [0.4699, 0.4387, 0.7470],
        [0.1091, 0.8732, 0.5547],
        [0.0381, 0.5743, 0.8828],
    ]
)
_HARTMANN6_A = np.array(
    [
        [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
        [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
        [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
    ]
)
_HARTMANN6_P = 1e-4 * np.array(
    [
        [1312.0, 1696.0, 5569.0, 124.0, 8283.0, 5886.0],
        [2329.0, 4135.0, 8307.0, 3736.0, 1004.0, 9991.0],
        [2348.0, 1451.0, 3522.0, 2883.0, 3047.0, 6650.0],
        [4047.0, 8828.0, 8732.0, 5743.0, 1091.0, 381.0],
    ]
)


def _hartmann_sum(x: np.ndarray, A: np.ndarray, P: np.ndarray) -> np.ndarray:
    inner = np.sum(A[None, :, :] * (x[:, None, :] - P[None, :, :]) ** 2, axis=2)
    return np.exp(-inner) @ _HARTMANN_ALPHA


def hartmann3(x: np.ndarray) -> np.ndarray:
    return _hartmann_sum(_batch(x), _HARTMANN3_A, _HARTMANN3_P)


def hartmann4(x: np.ndarray) -> np.ndarray:
    # Rescaled four-dimensional variant on the first four columns of the six-dimensional constants.
    x = _batch(x)
    A = _HARTMANN6_A[:, :4]
    P = _HARTMANN6_P[:, :4]
    inner = np.sum(A.T[None, :, :] * (x[:, :, None] - P.T[None, :, :]) ** 2, axis=1)
    return -(1.1 - np.exp(-inner) @ _HARTMANN_ALPHA) / 0.839


def hartmann6(x: np.ndarray) -> np.ndarray:
    return _hartmann_sum(_batch(x), _HARTMANN6_A, _HARTMANN6_P)


def levy(x: np.ndarray) -> np.ndarray:
    x = _batch(x)
    w = 1 + (x - 1) / 4
    head = np.sin(np.pi * w[:, 0]) ** 2
    body = np.sum((w[:, :-1] - 1) ** 2 * (1 + 10 * np.sin(np.pi * w[:, :-1] + 1) ** 2), axis=1)
    tail = (w[:, -1] - 1) ** 2 * (1 + np.sin(2 * np.pi * w[:, -1]) ** 2)
    return -(head + body + tail)


@dataclass(frozen=True, eq=False)
class KernelExpansion:
    """Finite kernel expansion ``f(x) = sum_i w_i k(x, c_i)``, an element of the kernel's RKHS."""

    kernel: KernelSpec
    centers: np.ndarray
    weights: np.ndarray

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return cross_covariance(self.kernel, _batch(x), self.centers) @ self.weights

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return cross_covariance_grad(self.kernel, np.asarray(x, dtype=float), self.centers).T @ self.weights

    def rkhs_norm(self) -> float:
        """``sqrt(w^T K_c w)``."""
        K = cross_covariance(self.kernel, self.centers, self.centers)
        return float(np.sqrt(max(self.weights @ K @ self.weights, 0.0)))


def _sobol_probe(domain: Box, log2_size: int, seed: int | None = None) -> np.ndarray:
    sampler = qmc.Sobol(d=domain.dim, scramble=seed is not None, seed=seed)
    return domain.from_unit(sampler.random_base2(log2_size))


def _probe_statistics(
    function: Callable[[np.ndarray], np.ndarray], domain: Box, extra: np.ndarray
) -> tuple[float, float]:
    values = np.concatenate([function(_sobol_probe(domain, VALUE_RANGE_PROBE_LOG2)), function(extra)])
    return float(values.max() - values.min()), float(np.abs(values).max())


def _benchmark(
    name: ObjectiveChoices,
    domain: Box,
    function: Callable[[np.ndarray], np.ndarray],
    f_star: float,
    x_star: Sequence[Sequence[float]],
) -> ObjectiveSpec:
    optimizers = tuple(np.asarray(x, dtype=float) for x in x_star)
    value_range, sup_norm = _probe_statistics(function, domain, np.vstack(optimizers))
    return ObjectiveSpec(
        name=name,
        domain=domain,
        function=function,
        f_star=f_star,
        x_star=optimizers,
        value_range=value_range,
        sup_norm=sup_norm,
    )


def benchmark(name: ObjectiveChoices | str) -> ObjectiveSpec:
    """Returns one of the six synthetic benchmarks of the experimental study.

    :raises InputError: for unknown names, or for `SYNTHETIC_RKHS` which needs `synthetic_rkhs`.
    """
    name = ObjectiveChoices.parse(str(name))
    if name == ObjectiveChoices.BRANIN:
        return _benchmark(
            name,
            Box(lower=(-5.0, 0.0), upper=(10.0, 15.0)),
            branin,
            -0.39788735772973816,
            [(-np.pi, 12.275), (np.pi, 2.275), (3 * np.pi, 2.475)],
        )
    if name == ObjectiveChoices.RASTRIGIN3:
        return _benchmark(name, Box.cube(-5.12, 5.12, 3), rastrigin, 0.0, [(0.0, 0.0, 0.0)])
    if name == ObjectiveChoices.HARTMANN3:
        return _benchmark(
            name,
            Box.cube(0.0, 1.0, 3),
            hartmann3,
            3.86278214782076,
            [(0.114614, 0.555649, 0.852547)],
        )
    if name == ObjectiveChoices.HARTMANN4:
        return _benchmark(
            name,
            Box.cube(0.0, 1.0, 4),
            hartmann4,
            3.1344941412224,
            [(0.1873952721, 0.1941515308, 0.5579177776, 0.2647796223)],
        )
    if name == ObjectiveChoices.LEVY5:
        return _benchmark(name, Box.cube(-10.0, 10.0, 5), levy, 0.0, [(1.0,) * 5])
    if name == ObjectiveChoices.HARTMANN6:
        return _benchmark(
            name,
            Box.cube(0.0, 1.0, 6),
            hartmann6,
            3.32236801141551,
            [(0.20168952, 0.15001069, 0.47687398, 0.27533243, 0.31165162, 0.65730054)],
        )
    raise InputError("synthetic RKHS objectives are built with synthetic_rkhs()")


def _locate_maximum(expansion: KernelExpansion, domain: Box, rng: np.random.Generator) -> tuple[float, np.ndarray]:
    """Dense scrambled-Sobol search followed by bounded L-BFGS-B refinement of the best candidates."""
    probe = _sobol_probe(domain, 16, seed=int(rng.integers(2**32)))
    candidates = np.vstack([probe, expansion.centers])
    values = expansion(candidates)
    best_x = candidates[int(np.argmax(values))]
    best_value = float(values.max())
    for start in candidates[np.argsort(values)[::-1][:20]]:
        result = minimize(
            lambda x: (-float(expansion(x)[0]), -expansion.gradient(x)),
            start,
            jac=True,
            method="L-BFGS-B",
            bounds=domain.bounds,
        )
        x = domain.clip(result.x)
        value = float(expansion(x)[0])
        if value > best_value:
            best_value, best_x = value, x
    return best_value, best_x


def synthetic_rkhs(
    kernel: KernelSpec,
    n_centers: int,
    weight_bound: float,
    domain: Box,
    rng: np.random.Generator,
    weights: Sequence[float] | None = None,
) -> ObjectiveSpec:
    """Builds a random member of the kernel's RKHS with norm at most `weight_bound`.

    Centers are uniform in `domain`; weights are standard normal unless given. When the RKHS norm
    exceeds `weight_bound` the weights are rescaled so that it equals `weight_bound`.
    """
    if n_centers < 1:
        raise InputError("n_centers must be positive")
    if weight_bound <= 0:
        raise InputError("weight_bound must be positive")
    centers = domain.sample_uniform(rng, n_centers)
    w = rng.standard_normal(n_centers) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (n_centers,):
        raise InputError("need one weight per center")
    expansion = KernelExpansion(kernel=kernel, centers=centers, weights=w)
    norm = expansion.rkhs_norm()
    if norm > weight_bound:
        expansion = KernelExpansion(kernel=kernel, centers=centers, weights=w * (weight_bound / norm))

    f_star, x_star = _locate_maximum(expansion, domain, rng)
    value_range, sup_norm = _probe_statistics(expansion, domain, x_star[None, :])
    logger.debug(f"Built synthetic RKHS objective in d={domain.dim} with f*={f_star:.6f}")
    return ObjectiveSpec(
        name=ObjectiveChoices.SYNTHETIC_RKHS,
        domain=domain,
        function=expansion,
        f_star=f_star,
        x_star=(x_star,),
        value_range=value_range,
        sup_norm=sup_norm,
    )


def synthetic_rkhs_objective(
    seed: int,
    dim: int = SYNTHETIC_RKHS_DIM,
    n_centers: int = 50,
    weight_bound: float = 1.0,
    kernel: KernelSpec | None = None,
) -> ObjectiveSpec:
    """High-dimensional stand-in task on ``[0, 1]^dim`` with a seeded random RKHS function."""
    domain = Box.cube(0.0, 1.0, dim)
    kernel = kernel or KernelSpec(lengthscale=default_lengthscale(domain.widths))
    return synthetic_rkhs(kernel, n_centers, weight_bound, domain, np.random.default_rng(seed))


def evaluate_batch(obj: ObjectiveSpec, X: np.ndarray) -> np.ndarray:
    """Noise-free values of a batch of points inside the domain."""
    X = _batch(X)
    if X.shape[1] != obj.dim:
        raise InputError(f"{obj.name} expects points of dimension {obj.dim}, got {X.shape[1]}")
    if not np.all(obj.domain.contains(X, atol=DOMAIN_TOLERANCE)):
        raise InputError(f"point outside the {obj.name} domain")
    return np.asarray(obj.function(X), dtype=float)


def evaluate(obj: ObjectiveSpec, x: np.ndarray | Sequence[float]) -> float:
    """Noise-free value of `obj` at `x`, in maximization form.

    :raises InputError: if `x` lies outside the domain or has the wrong dimension.
    """
    return float(evaluate_batch(obj, np.asarray(x, dtype=float)[None, :])[0])


def observe(obj: ObjectiveSpec, noise: NoiseModel, x: np.ndarray | Sequence[float], rng: np.random.Generator) -> float:
    """Noisy observation ``f(x) + eps`` drawn from the caller's stream."""
    value = evaluate(obj, x)
    if noise.kind == NoiseKindChoices.GAUSSIAN and noise.R > 0:
        value += noise.R * float(rng.standard_normal())
    return value


def default_noise(obj: ObjectiveSpec) -> NoiseModel:
    """Gaussian noise at one percent of the objective's value range."""
    return NoiseModel(kind=NoiseKindChoices.GAUSSIAN, R=DEFAULT_NOISE_FRACTION * obj.value_range)


__all__ = [
    "KernelExpansion",
    "NoiseModel",
    "ObjectiveSpec",
    "benchmark",
    "default_noise",
    "evaluate",
    "evaluate_batch",
    "observe",
    "synthetic_rkhs",
    "synthetic_rkhs_objective",
]
