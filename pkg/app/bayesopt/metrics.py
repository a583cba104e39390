"""Regret accounting, the solver-inaccuracy ledger and realized information gain."""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from app.core.exceptions import InputError

from .gp import GpPosterior, information_gain
from .kernels import KernelSpec, gram_matrix

SUBLINEAR_SLOPE = 0.98
MIN_DIAGNOSTIC_LENGTH = 10


@dataclass(frozen=True)
class IterationRecord:
    """One row of a run trace.

    :param t: iteration, starting at 1.
    :param x: selected point.
    :param y: observation at `x`.
    :param f_x: noise-free objective value at `x`.
    :param r: instantaneous regret.
    :param R: cumulative regret.
    :param eta_hat: measured solution accuracy, ``None`` when not measured.
    :param eta_floor: configured worst-case accuracy.
    :param beta: exploration multiplier.
    :param gamma: realized information gain after this iteration.
    :param solve_ms: solver wall time in milliseconds.
    :param n_evals: acquisition calls made by the solver.
    :param build_ms: acquisition construction wall time in milliseconds.
    :param fill_distance: fill-distance estimate of the grid candidate set, if measured.
    :param shift_min: smallest shifted acquisition value seen by the shift audit, if audited.
    """

    t: int
    x: tuple[float, ...]
    y: float
    f_x: float
    r: float
    R: float
    eta_hat: float | None
    eta_floor: float
    beta: float
    gamma: float
    solve_ms: float
    n_evals: int
    build_ms: float
    fill_distance: float | None = None
    shift_min: float | None = None


@dataclass
class InaccuracyLedger:
    """Running record of measured and worst-case solver accuracy."""

    eta: list[float | None] = field(default_factory=list)
    eta_floor: list[float] = field(default_factory=list)
    M: list[float] = field(default_factory=list)
    M_hat: list[float] = field(default_factory=list)
    beta: list[float] = field(default_factory=list)
    gamma: list[float] = field(default_factory=list)

    def record(self, eta_hat: float | None, eta_floor: float, beta_t: float, gamma_t: float) -> None:
        if not 0.0 < eta_floor <= 1.0:
            raise InputError("eta_floor must lie in (0, 1]")
        previous_M = self.M[-1] if self.M else 0.0
        previous_M_hat = self.M_hat[-1] if self.M_hat else 0.0
        self.eta.append(eta_hat)
        self.eta_floor.append(eta_floor)
        self.M.append(previous_M + (1.0 - eta_floor))
        self.M_hat.append(previous_M_hat + (1.0 - eta_hat if eta_hat is not None else 0.0))
        self.beta.append(beta_t)
        self.gamma.append(gamma_t)

    @property
    def measured(self) -> bool:
        return bool(self.eta) and all(eta is not None for eta in self.eta)


@dataclass
class RunTrace:
    """Everything a single Bayesian optimization run produced."""

    objective: dict[str, object]
    config: dict[str, object]
    seed: int
    records: list[IterationRecord] = field(default_factory=list)
    ledger: InaccuracyLedger = field(default_factory=InaccuracyLedger)

    @property
    def T(self) -> int:
        return len(self.records)

    @property
    def f_star(self) -> float:
        return float(self.objective["f_star"])  # type: ignore[arg-type]

    def cumulative_regret(self) -> np.ndarray:
        return np.array([record.R for record in self.records])

    def instantaneous_regrets(self) -> np.ndarray:
        return np.array([record.r for record in self.records])

    def values(self) -> np.ndarray:
        return np.array([record.f_x for record in self.records])

    def total_solve_ms(self) -> float:
        return float(sum(record.solve_ms for record in self.records))


def instantaneous_regret(f_star: float, f_xt: float) -> float:
    """``f* - f(x_t)`` on noise-free values."""
    return f_star - f_xt


def dense_info_gain(kernel: KernelSpec, X: np.ndarray, tau: float) -> float:
    """``1/2 log det(I + K / tau)`` through a dense log-determinant."""
    if tau <= 0:
        raise InputError("tau must be positive")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        return 0.0
    sign, logdet = np.linalg.slogdet(np.eye(X.shape[0]) + gram_matrix(kernel, X) / tau)
    if sign <= 0:
        raise InputError("I + K / tau must be positive definite")
    return 0.5 * float(logdet)


def realized_info_gain(gp_chain: Sequence[GpPosterior], tau: float | None = None) -> np.ndarray:
    """Realized information gain of each posterior of a chain.

    With ``tau`` unset (or equal to the posteriors' noise), each value comes from the stored
    Cholesky factor; another ``tau`` falls back to a dense recomputation.
    """
    if tau is not None and tau <= 0:
        raise InputError("tau must be positive")
    gains = []
    for gp in gp_chain:
        if tau is None or tau == gp.noise:
            gains.append(information_gain(gp))
        else:
            gains.append(dense_info_gain(gp.kernel, gp.X, tau))
    return np.asarray(gains, dtype=float)


def simple_regret(trace: RunTrace) -> float:
    """``f* - max_t f(x_t)`` over the selected points."""
    if not trace.records:
        raise InputError("simple regret of an empty trace")
    return trace.f_star - float(np.max(trace.values()))


def simple_regret_curve(trace: RunTrace) -> np.ndarray:
    """Simple regret after each iteration; nonincreasing."""
    if not trace.records:
        raise InputError("simple regret of an empty trace")
    return trace.f_star - np.maximum.accumulate(trace.values())


@dataclass(frozen=True)
class SublinearityReport:
    """Empirical check of ``R_T / T -> 0``.

    :param average_regret: ``R_t / t`` at the quarter, half, three-quarter and full horizons.
    :param slope: least-squares slope of ``log R_t`` against ``log t`` over the final half.
    :param sublinear: slope below `SUBLINEAR_SLOPE` and average regret decreased from the half to
        the full horizon.
    """

    average_regret: dict[int, float]
    slope: float
    sublinear: bool

    def as_dict(self) -> dict[str, object]:
        return {
            "average_regret": {str(t): value for t, value in self.average_regret.items()},
            "slope": self.slope,
            "sublinear": self.sublinear,
        }


def sublinearity_diagnostic(R: Sequence[float] | np.ndarray) -> SublinearityReport:
    """Diagnoses sublinear growth of a cumulative regret sequence ``R_1, ..., R_T``.

    A sequence that is identically zero is reported sublinear.
    """
    R = np.asarray(R, dtype=float)
    T = R.shape[0]
    if T < MIN_DIAGNOSTIC_LENGTH:
        raise InputError(f"sublinearity diagnostic needs at least {MIN_DIAGNOSTIC_LENGTH} iterations")
    t = np.arange(1, T + 1)
    horizons = sorted({max(1, int(math.ceil(T * q))) for q in (0.25, 0.5, 0.75, 1.0)})
    average = {h: float(R[h - 1] / h) for h in horizons}

    if not np.any(R > 0):
        return SublinearityReport(average_regret=average, slope=0.0, sublinear=True)

    half = T // 2
    tail = slice(half, T)
    positive = R[tail] > 0
    if positive.sum() < 2:
        slope = 0.0
    else:
        slope = float(np.polyfit(np.log(t[tail][positive]), np.log(R[tail][positive]), 1)[0])
    half_horizon = max(1, int(math.ceil(T * 0.5)))
    decreased = average[T] < average[half_horizon]
    return SublinearityReport(average_regret=average, slope=slope, sublinear=slope < SUBLINEAR_SLOPE and decreased)


__all__ = [
    "InaccuracyLedger",
    "IterationRecord",
    "RunTrace",
    "SublinearityReport",
    "dense_info_gain",
    "instantaneous_regret",
    "realized_info_gain",
    "simple_regret",
    "simple_regret_curve",
    "sublinearity_diagnostic",
]
