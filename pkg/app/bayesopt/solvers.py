"""Acquisition-function maximizers.

Every solver returns a `SolverResult` whose `acq_value` is the shifted acquisition at `x_chosen`,
so that dividing it by `reference_max` gives the measured solution accuracy of the iteration.
"""

import logging
import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import cKDTree
from scipy.stats import qmc

from app.core.exceptions import InputError

from .acquisition import AcquisitionSpec
from .choices import GRID_SOLVERS, SolverKindChoices
from .domain import Box

logger = logging.getLogger(__name__)

DEFAULT_GRID_COEFFICIENT = 100
DEFAULT_FIXED_SIZE = 100
DEFAULT_STARTS_PER_DIM = 10
DEFAULT_MAX_INNER_ITERS = 200
DEFAULT_INNER_TOL = 1e-8
DEFAULT_ORACLE_SIZE = 100_000
ORACLE_CHUNK = 8192
ARMIJO = 1e-4
MIN_STEP = 1e-12


@dataclass(frozen=True)
class SolverSpec:
    """Acquisition solver and its effort knobs.

    :param kind: solver kind.
    :param grid_coefficient: c in the random-grid size ``ceil(c t^p)``.
    :param grid_exponent: p in the random-grid size, 1 for the linear rule.
    :param fixed_size: grid size of the fixed-size random grid.
    :param n_starts: local-search starts, ``10 d`` when ``None``.
    :param max_inner_iters: iteration cap of each local search.
    :param inner_tol: local-search stopping tolerance.
    :param oracle_size: number of low-discrepancy points of the reference oracle.
    """

    kind: SolverKindChoices = SolverKindChoices.UNIFORM_GRID
    grid_coefficient: int = DEFAULT_GRID_COEFFICIENT
    grid_exponent: float = 1.0
    fixed_size: int = DEFAULT_FIXED_SIZE
    n_starts: int | None = None
    max_inner_iters: int = DEFAULT_MAX_INNER_ITERS
    inner_tol: float = DEFAULT_INNER_TOL
    oracle_size: int = DEFAULT_ORACLE_SIZE

    def __post_init__(self) -> None:
        if self.grid_coefficient < 1 or self.fixed_size < 1 or self.oracle_size < 1:
            raise InputError("grid sizes must be positive")
        if self.grid_exponent < 1.0:
            raise InputError("grid_exponent must be at least 1")
        if self.n_starts is not None and self.n_starts < 1:
            raise InputError("n_starts must be positive")
        if self.max_inner_iters < 0 or self.inner_tol <= 0:
            raise InputError("max_inner_iters must be nonnegative and inner_tol positive")

    @property
    def is_grid(self) -> bool:
        return self.kind in GRID_SOLVERS

    def starts(self, dim: int) -> int:
        return self.n_starts if self.n_starts is not None else DEFAULT_STARTS_PER_DIM * dim

    def grid_size(self, t: int) -> int:
        """Number of candidates the solver scans at iteration `t`."""
        if self.kind == SolverKindChoices.UNIFORM_GRID:
            return uniform_grid_size(t, self.grid_coefficient, self.grid_exponent)
        if self.kind == SolverKindChoices.FIXED_GRID:
            return self.fixed_size
        if self.kind == SolverKindChoices.REFERENCE_ORACLE:
            return self.oracle_size
        raise InputError(f"{self.kind} does not scan a grid")

    def as_dict(self, dim: int | None = None) -> dict[str, object]:
        return {
            "kind": str(self.kind),
            "grid_coefficient": self.grid_coefficient,
            "grid_exponent": self.grid_exponent,
            "fixed_size": self.fixed_size,
            "n_starts": self.starts(dim) if dim is not None else self.n_starts,
            "max_inner_iters": self.max_inner_iters,
            "inner_tol": self.inner_tol,
            "oracle_size": self.oracle_size,
        }


@dataclass(frozen=True, eq=False)
class SolverResult:
    """Outcome of one acquisition solve.

    :param x_chosen: selected point.
    :param acq_value: shifted acquisition value at `x_chosen`.
    :param n_evals: number of acquisition (and gradient) calls.
    :param wall_time: seconds spent in the solver.
    :param grid_used: candidate set of grid solvers.
    :param touched: points whose values the solver compared, added to the reference oracle.
    """

    x_chosen: np.ndarray
    acq_value: float
    n_evals: int
    wall_time: float
    grid_used: np.ndarray | None = None
    touched: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))


def uniform_grid_size(t: int, c: int, exponent: float = 1.0) -> int:
    if t < 1:
        raise InputError("iterations start at t = 1")
    return int(math.ceil(c * t**exponent))


def draw_uniform_grid(domain: Box, size: int, rng: np.random.Generator) -> np.ndarray:
    """Independent uniform points of the box, shape ``(size, d)``."""
    if size < 1:
        raise InputError("grid size must be positive")
    return domain.sample_uniform(rng, size)


def scan_grid(acq: AcquisitionSpec, grid: np.ndarray) -> tuple[int, float]:
    """Linear max-scan of the shifted acquisition; ties go to the lowest index."""
    values = acq.evaluate(grid)
    index = int(np.argmax(values))
    return index, float(values[index])


def solve_on_grid(acq: AcquisitionSpec, grid: np.ndarray) -> SolverResult:
    """Selects the best point of an already drawn candidate set."""
    start = time.perf_counter()
    index, value = scan_grid(acq, grid)
    return SolverResult(
        x_chosen=grid[index].copy(),
        acq_value=value,
        n_evals=grid.shape[0],
        wall_time=time.perf_counter() - start,
        grid_used=grid,
        touched=grid[index : index + 1].copy(),
    )


def solve_uniform_grid(
    acq: AcquisitionSpec,
    domain: Box,
    t: int,
    c: int,
    rng: np.random.Generator,
    exponent: float = 1.0,
) -> SolverResult:
    """Random grid of ``ceil(c t^p)`` fresh uniform points, scanned exactly.

    :param rng: stream of iteration `t` only, so grids of different iterations are independent.
    """
    start = time.perf_counter()
    grid = draw_uniform_grid(domain, uniform_grid_size(t, c, exponent), rng)
    result = solve_on_grid(acq, grid)
    return _retimed(result, start)


def solve_fixed_grid(acq: AcquisitionSpec, domain: Box, size: int, rng: np.random.Generator) -> SolverResult:
    """Random grid of constant size, redrawn every iteration."""
    start = time.perf_counter()
    result = solve_on_grid(acq, draw_uniform_grid(domain, size, rng))
    return _retimed(result, start)


def _retimed(result: SolverResult, start: float) -> SolverResult:
    return SolverResult(
        x_chosen=result.x_chosen,
        acq_value=result.acq_value,
        n_evals=result.n_evals,
        wall_time=time.perf_counter() - start,
        grid_used=result.grid_used,
        touched=result.touched,
    )


class _TrackedObjective:
    """Counts acquisition calls and keeps the best point seen, evaluated inside the box."""

    def __init__(self, acq: AcquisitionSpec, domain: Box) -> None:
        self.acq = acq
        self.domain = domain
        self.n_evals = 0
        self.best_x: np.ndarray | None = None
        self.best_value = -np.inf
        self.terminals: list[np.ndarray] = []

    def value(self, x: np.ndarray) -> float:
        x = self.domain.clip(np.asarray(x, dtype=float))
        self.n_evals += 1
        value = self.acq(x)
        if value > self.best_value:
            self.best_value, self.best_x = value, x.copy()
        return value

    def values(self, X: np.ndarray) -> np.ndarray:
        X = self.domain.clip(X)
        self.n_evals += X.shape[0]
        values = self.acq.evaluate(X)
        index = int(np.argmax(values))
        if values[index] > self.best_value:
            self.best_value, self.best_x = float(values[index]), X[index].copy()
        return values

    def gradient(self, x: np.ndarray) -> np.ndarray:
        self.n_evals += 1
        return self.acq.gradient(self.domain.clip(np.asarray(x, dtype=float)))

    def result(self, start: float) -> SolverResult:
        assert self.best_x is not None
        touched = np.vstack([self.best_x[None, :], *[x[None, :] for x in self.terminals]])
        return SolverResult(
            x_chosen=self.best_x,
            acq_value=self.best_value,
            n_evals=self.n_evals,
            wall_time=time.perf_counter() - start,
            touched=touched,
        )


def _random_starts(domain: Box, n_starts: int, rng: np.random.Generator, starts: np.ndarray | None) -> np.ndarray:
    if starts is not None:
        return np.atleast_2d(np.asarray(starts, dtype=float))
    if n_starts < 1:
        raise InputError("n_starts must be positive")
    return domain.sample_uniform(rng, n_starts)


def solve_multistart_simplex(
    acq: AcquisitionSpec,
    domain: Box,
    n_starts: int,
    max_inner_iters: int,
    inner_tol: float,
    rng: np.random.Generator,
    starts: np.ndarray | None = None,
) -> SolverResult:
    """Bounded Nelder-Mead on the negated acquisition from uniform starts.

    Returns the best point evaluated over all searches, so the result never falls below the
    best start.
    """
    start = time.perf_counter()
    tracked = _TrackedObjective(acq, domain)
    points = _random_starts(domain, n_starts, rng, starts)
    tracked.values(points)
    if max_inner_iters == 0:
        return tracked.result(start)

    for x0 in points:
        result = minimize(
            lambda x: -tracked.value(x),
            x0,
            method="Nelder-Mead",
            bounds=domain.bounds,
            options={"maxiter": max_inner_iters, "xatol": inner_tol, "fatol": inner_tol},
        )
        tracked.terminals.append(domain.clip(result.x))
    return tracked.result(start)


def _projected_ascent(tracked: _TrackedObjective, x0: np.ndarray, max_inner_iters: int, inner_tol: float) -> np.ndarray:
    domain = tracked.domain
    x = domain.clip(x0)
    value = tracked.value(x)
    step = float(np.mean(domain.widths))
    for _ in range(max_inner_iters):
        grad = tracked.gradient(x)
        if np.linalg.norm(domain.clip(x + grad) - x) <= inner_tol:
            break
        while step > MIN_STEP:
            candidate = domain.clip(x + step * grad)
            candidate_value = tracked.value(candidate)
            if candidate_value >= value + ARMIJO * float(grad @ (candidate - x)):
                break
            step *= 0.5
        else:
            break
        moved = float(np.linalg.norm(candidate - x))
        x, value = candidate, candidate_value
        step *= 2.0
        if moved <= inner_tol:
            break
    return x


def _lbfgsb(tracked: _TrackedObjective, x0: np.ndarray, max_inner_iters: int, inner_tol: float) -> np.ndarray:
    result = minimize(
        lambda x: (-tracked.value(x), -tracked.gradient(x)),
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=tracked.domain.bounds,
        options={"maxiter": max_inner_iters, "gtol": inner_tol, "ftol": inner_tol},
    )
    return tracked.domain.clip(result.x)


def _cg(tracked: _TrackedObjective, x0: np.ndarray, max_inner_iters: int, inner_tol: float) -> np.ndarray:
    domain = tracked.domain

    def gradient(x: np.ndarray) -> np.ndarray:
        # Outside the box the clipped objective is flat along the violated coordinates.
        inside = (x >= domain.lower_array) & (x <= domain.upper_array)
        return -tracked.gradient(x) * inside

    result = minimize(
        lambda x: -tracked.value(x),
        x0,
        jac=gradient,
        method="CG",
        options={"maxiter": max_inner_iters, "gtol": inner_tol},
    )
    return domain.clip(result.x)


GRADIENT_METHODS: dict[str, Callable[[_TrackedObjective, np.ndarray, int, float], np.ndarray]] = {
    "projected": _projected_ascent,
    "lbfgsb": _lbfgsb,
    "cg": _cg,
}


def solve_multistart_gradient(
    acq: AcquisitionSpec,
    domain: Box,
    n_starts: int,
    max_inner_iters: int,
    inner_tol: float,
    rng: np.random.Generator,
    method: str = "projected",
    starts: np.ndarray | None = None,
) -> SolverResult:
    """Multi-start local ascent using the analytic acquisition gradient.

    :param method: ``projected`` (box-projected gradient ascent with backtracking), ``lbfgsb``
        or ``cg``.
    :raises InputError: if the acquisition has no gradient, e.g. a Thompson grid sample.
    """
    if not acq.has_gradient:
        raise InputError("gradient solvers need a differentiable acquisition")
    if method not in GRADIENT_METHODS:
        raise InputError(f"unknown gradient method '{method}'")
    start = time.perf_counter()
    tracked = _TrackedObjective(acq, domain)
    points = _random_starts(domain, n_starts, rng, starts)
    tracked.values(points)
    if max_inner_iters == 0:
        return tracked.result(start)

    local_search = GRADIENT_METHODS[method]
    for x0 in points:
        terminal = local_search(tracked, x0, max_inner_iters, inner_tol)
        tracked.terminals.append(terminal)
    return tracked.result(start)


def oracle_points(domain: Box, oracle_size: int, rng: np.random.Generator) -> np.ndarray:
    """Scrambled Sobol points of the box, ``oracle_size`` of them."""
    if oracle_size < 1:
        raise InputError("oracle_size must be positive")
    sampler = qmc.Sobol(d=domain.dim, scramble=True, seed=rng)
    unit = sampler.random_base2(max(int(math.ceil(math.log2(oracle_size))), 0))[:oracle_size]
    return domain.from_unit(unit)


def _chunked_max(acq: AcquisitionSpec, points: np.ndarray) -> tuple[int, float]:
    best_index, best_value = 0, -np.inf
    for offset in range(0, points.shape[0], ORACLE_CHUNK):
        index, value = scan_grid(acq, points[offset : offset + ORACLE_CHUNK])
        if value > best_value:
            best_index, best_value = offset + index, value
    return best_index, best_value


def reference_max(
    acq: AcquisitionSpec,
    domain: Box,
    oracle_size: int,
    rng: np.random.Generator,
    extra: np.ndarray | None = None,
) -> float:
    """Dense estimate of the maximum of the shifted acquisition.

    UCB acquisitions are scanned on a scrambled Sobol set together with `extra` (the points every
    solver touched this iteration); a Thompson sample only exists on its grid, which is scanned
    exhaustively.
    """
    if not acq.evaluable_anywhere:
        return scan_grid(acq, acq.grid)[1]
    points = oracle_points(domain, oracle_size, rng)
    if extra is not None and extra.size:
        points = np.vstack([points, extra])
    return _chunked_max(acq, points)[1]


def solve_reference_oracle(
    acq: AcquisitionSpec, domain: Box, oracle_size: int, rng: np.random.Generator
) -> SolverResult:
    """Uses the reference oracle itself as the solver."""
    start = time.perf_counter()
    if not acq.evaluable_anywhere:
        return _retimed(solve_on_grid(acq, acq.grid), start)
    points = oracle_points(domain, oracle_size, rng)
    index, value = _chunked_max(acq, points)
    return SolverResult(
        x_chosen=points[index].copy(),
        acq_value=value,
        n_evals=points.shape[0],
        wall_time=time.perf_counter() - start,
        touched=points[index : index + 1].copy(),
    )


def fill_distance(
    grid: np.ndarray,
    domain: Box,
    probe_size: int | None,
    rng: np.random.Generator,
    probes: np.ndarray | None = None,
) -> float:
    """Monte Carlo estimate of ``sup_x min_i ||x - grid_i||`` over the box.

    :param probe_size: number of uniform probes, ``10 |grid|`` when ``None``.
    :param probes: explicit probe points, overriding `probe_size`.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.shape[0] == 0:
        raise InputError("grid must be nonempty")
    if probes is None:
        probes = domain.sample_uniform(rng, probe_size if probe_size is not None else 10 * grid.shape[0])
    distances, _ = cKDTree(grid).query(np.atleast_2d(probes))
    return float(np.max(distances))


def solver_grid(spec: SolverSpec, domain: Box, t: int, rng: np.random.Generator) -> np.ndarray:
    """Candidate set a grid solver scans at iteration `t`; Thompson samples are drawn on it."""
    if spec.kind == SolverKindChoices.UNIFORM_GRID:
        return draw_uniform_grid(domain, spec.grid_size(t), rng)
    if spec.kind == SolverKindChoices.FIXED_GRID:
        return draw_uniform_grid(domain, spec.fixed_size, rng)
    raise InputError(f"{spec.kind} has no candidate grid")


def solve(spec: SolverSpec, acq: AcquisitionSpec, domain: Box, t: int, rng: np.random.Generator) -> SolverResult:
    """Dispatches to the solver named by `spec`.

    Thompson samples are scanned on the grid they were drawn on; every other kind is rejected for
    them.
    """
    if not acq.evaluable_anywhere:
        if not spec.is_grid:
            raise InputError(f"Thompson samples can only be maximized by grid solvers, not {spec.kind}")
        return solve_on_grid(acq, acq.grid)

    kind = spec.kind
    if kind == SolverKindChoices.UNIFORM_GRID:
        return solve_uniform_grid(acq, domain, t, spec.grid_coefficient, rng, spec.grid_exponent)
    if kind == SolverKindChoices.FIXED_GRID:
        return solve_fixed_grid(acq, domain, spec.fixed_size, rng)
    if kind == SolverKindChoices.REFERENCE_ORACLE:
        return solve_reference_oracle(acq, domain, spec.oracle_size, rng)
    if kind == SolverKindChoices.MULTISTART_SIMPLEX:
        return solve_multistart_simplex(
            acq, domain, spec.starts(domain.dim), spec.max_inner_iters, spec.inner_tol, rng
        )
    method = {
        SolverKindChoices.MULTISTART_GRADIENT: "projected",
        SolverKindChoices.MULTISTART_LBFGSB: "lbfgsb",
        SolverKindChoices.MULTISTART_CG: "cg",
    }[kind]
    return solve_multistart_gradient(
        acq, domain, spec.starts(domain.dim), spec.max_inner_iters, spec.inner_tol, rng, method=method
    )


__all__ = [
    "DEFAULT_ORACLE_SIZE",
    "GRADIENT_METHODS",
    "SolverResult",
    "SolverSpec",
    "draw_uniform_grid",
    "fill_distance",
    "oracle_points",
    "reference_max",
    "scan_grid",
    "solve",
    "solve_fixed_grid",
    "solve_multistart_gradient",
    "solve_multistart_simplex",
    "solve_on_grid",
    "solve_reference_oracle",
    "solve_uniform_grid",
    "solver_grid",
    "uniform_grid_size",
]
