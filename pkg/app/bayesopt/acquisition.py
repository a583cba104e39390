"""Acquisition functions: exploration schedules, UCB surfaces, Thompson grid samples and shifts."""

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from app.core.exceptions import InputError

from .choices import AcquisitionKindChoices, BetaKindChoices
from .domain import Box
from .gp import GpPosterior, posterior_gradients, posterior_mean_var_batch, sample_on_grid

DEFAULT_DELTA = 0.1


class Acquisition(Protocol):
    """What acquisition solvers need from an acquisition function.

    `evaluate` returns shifted values, so that every value a solver sees is the one used for
    the accuracy ratio.
    """

    @property
    def has_gradient(self) -> bool: ...

    def evaluate(self, X: np.ndarray) -> np.ndarray: ...

    def gradient(self, x: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class BetaSchedule:
    """Exploration multiplier schedule.

    :param kind: theoretical (``B + R sqrt(2 (gamma + 1 + log(divisor / delta)))``) or practical
        (``sqrt(log(t + 2))``).
    :param B: bound on the RKHS norm of the objective.
    :param R: sub-Gaussian noise scale.
    :param delta: confidence level.
    :param delta_divisor: 1 for the inexact algorithms, 2 for random-grid UCB, 3 for random-grid TS.
    """

    kind: BetaKindChoices = BetaKindChoices.PRACTICAL
    B: float = 1.0
    R: float = 0.0
    delta: float = DEFAULT_DELTA
    delta_divisor: int = 1

    def __post_init__(self) -> None:
        if self.B < 0 or self.R < 0:
            raise InputError("B and R must be nonnegative")
        if not 0.0 < self.delta < 1.0:
            raise InputError("delta must lie in (0, 1)")
        if self.delta_divisor not in (1, 2, 3):
            raise InputError("delta_divisor must be 1, 2 or 3")

    def as_dict(self) -> dict[str, object]:
        return {
            "kind": str(self.kind),
            "B": self.B,
            "R": self.R,
            "delta": self.delta,
            "delta_divisor": self.delta_divisor,
        }


def beta(schedule: BetaSchedule, t: int, gamma_prev: float) -> float:
    """Exploration multiplier beta_t.

    :param schedule: schedule to evaluate.
    :param t: iteration index, starting at 1.
    :param gamma_prev: information gain after the previous iteration.
    """
    if t < 1:
        raise InputError("iterations start at t = 1")
    if schedule.kind == BetaKindChoices.PRACTICAL:
        return math.sqrt(math.log(t + 2))
    gamma_prev = max(gamma_prev, 0.0)
    return schedule.B + schedule.R * math.sqrt(
        2.0 * (gamma_prev + 1.0 + math.log(schedule.delta_divisor / schedule.delta))
    )


def ucb_values(gp: GpPosterior, beta_t: float, shift: float, X: np.ndarray) -> np.ndarray:
    """Shifted UCB ``mu + beta_t sigma + shift`` of a batch of points."""
    mean, var = posterior_mean_var_batch(gp, X)
    return mean + beta_t * np.sqrt(var) + shift


def ucb_value(gp: GpPosterior, beta_t: float, shift: float, x: np.ndarray) -> float:
    """Shifted UCB of a single point."""
    if beta_t < 0:
        raise InputError("beta_t must be nonnegative")
    return float(ucb_values(gp, beta_t, shift, np.asarray(x, dtype=float)[None, :])[0])


def ucb_shift(B: float) -> float:
    """Constant making the UCB nonnegative whenever ``sup |f| <= B`` and the confidence bound holds."""
    if B < 0:
        raise InputError("B must be nonnegative")
    return float(B)


def ts_shift(grid_size: int, delta: float, beta_T: float, v: float, B: float) -> float:
    """Constant making a Thompson grid sample nonnegative with probability ``1 - delta``.

    Returns ``(1 + sqrt(2 log(grid_size / delta))) (beta_T + v) + B``.
    """
    if grid_size < 1:
        raise InputError("grid_size must be positive")
    if not 0.0 < delta <= 1.0:
        raise InputError("delta must lie in (0, 1]")
    return (1.0 + math.sqrt(2.0 * math.log(grid_size / delta))) * (beta_T + v) + B


def enlarged_variance(eta_floor: float, B: float) -> float:
    """Variance inflation ``(1 / eta_floor - 1) B`` that compensates a solver of worst-case accuracy
    `eta_floor`."""
    if not 0.0 < eta_floor <= 1.0:
        raise InputError("eta_floor must lie in (0, 1]")
    return (1.0 / eta_floor - 1.0) * B


@dataclass(frozen=True, eq=False)
class AcquisitionSpec:
    """One iteration's acquisition function.

    UCB specs evaluate anywhere in the domain through the posterior; TS specs only exist on the
    grid their sample was drawn on.
    """

    kind: AcquisitionKindChoices
    beta_t: float
    shift: float = 0.0
    gp: GpPosterior | None = None
    grid: np.ndarray | None = None
    sampled_values: np.ndarray | None = None
    v_tilde: float = 0.0
    _grid_index: dict[bytes, int] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.shift < 0:
            raise InputError("shift must be nonnegative")
        if self.kind == AcquisitionKindChoices.UCB and self.gp is None:
            raise InputError("UCB acquisition needs a posterior")
        if self.kind == AcquisitionKindChoices.TS:
            if self.grid is None or self.sampled_values is None:
                raise InputError("TS acquisition needs a grid and sampled values")
            for i, point in enumerate(self.grid):
                self._grid_index.setdefault(point.tobytes(), i)

    @property
    def has_gradient(self) -> bool:
        return self.kind == AcquisitionKindChoices.UCB

    @property
    def evaluable_anywhere(self) -> bool:
        return self.kind == AcquisitionKindChoices.UCB

    def with_shift(self, shift: float) -> "AcquisitionSpec":
        return AcquisitionSpec(
            kind=self.kind,
            beta_t=self.beta_t,
            shift=shift,
            gp=self.gp,
            grid=self.grid,
            sampled_values=self.sampled_values,
            v_tilde=self.v_tilde,
        )

    def raw_values(self, X: np.ndarray) -> np.ndarray:
        """Unshifted acquisition values."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == AcquisitionKindChoices.UCB:
            return ucb_values(self.gp, self.beta_t, 0.0, X)
        try:
            index = [self._grid_index[point.tobytes()] for point in X]
        except KeyError as exc:
            raise InputError("a Thompson sample can only be evaluated on its own grid") from exc
        return self.sampled_values[index]

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """Shifted acquisition values of a batch of points."""
        return self.raw_values(X) + self.shift

    def __call__(self, x: np.ndarray) -> float:
        return float(self.evaluate(np.asarray(x, dtype=float)[None, :])[0])

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """Gradient ``grad mu + beta_t grad sigma``; the shift does not contribute.

        :raises InputError: for Thompson samples, which have no gradient.
        """
        if not self.has_gradient:
            raise InputError("Thompson grid samples are not differentiable")
        _, _, dmean, dstd = posterior_gradients(self.gp, x)
        return dmean + self.beta_t * dstd


def ucb_build(gp: GpPosterior, beta_t: float, shift: float) -> AcquisitionSpec:
    """UCB acquisition ``mu_{t-1} + beta_t sigma_{t-1}`` shifted by `shift`."""
    if beta_t < 0:
        raise InputError("beta_t must be nonnegative")
    return AcquisitionSpec(kind=AcquisitionKindChoices.UCB, beta_t=beta_t, shift=shift, gp=gp)


def ts_build(
    gp: GpPosterior,
    grid: np.ndarray,
    beta_t: float,
    v_tilde: float,
    rng: np.random.Generator,
    shift: float = 0.0,
) -> AcquisitionSpec:
    """Thompson acquisition: one joint posterior sample on `grid` with per-point standard deviation
    ``beta_t sigma_{t-1}(x) + v_tilde``.

    ``v_tilde = 0`` is plain GP-TS; a positive `v_tilde` is the enlarged-variance variant.
    """
    if v_tilde < 0:
        raise InputError("v_tilde must be nonnegative")
    grid = np.atleast_2d(np.asarray(grid, dtype=float))

    def scale_fn(points: np.ndarray) -> np.ndarray:
        _, var = posterior_mean_var_batch(gp, points)
        return beta_t * np.sqrt(var) + v_tilde

    values = sample_on_grid(gp, grid, scale_fn, rng)
    return AcquisitionSpec(
        kind=AcquisitionKindChoices.TS,
        beta_t=beta_t,
        shift=shift,
        grid=grid,
        sampled_values=values,
        v_tilde=v_tilde,
    )


@dataclass(frozen=True)
class ShiftAudit:
    """Outcome of checking a shifted acquisition for nonnegativity."""

    n_points: int
    min_value: float

    @property
    def nonnegative(self) -> bool:
        return self.min_value >= 0.0


def audit_shift(acq: AcquisitionSpec, domain: Box, n_probes: int, rng: np.random.Generator) -> ShiftAudit:
    """Evaluates the shifted acquisition at uniform probes (UCB) or on its grid (TS)."""
    points = domain.sample_uniform(rng, n_probes) if acq.evaluable_anywhere else acq.grid
    values = acq.evaluate(points)
    return ShiftAudit(n_points=int(values.shape[0]), min_value=float(values.min()))


__all__ = [
    "DEFAULT_DELTA",
    "Acquisition",
    "AcquisitionSpec",
    "BetaSchedule",
    "ShiftAudit",
    "audit_shift",
    "beta",
    "enlarged_variance",
    "ts_build",
    "ts_shift",
    "ucb_build",
    "ucb_shift",
    "ucb_value",
    "ucb_values",
]
