"""The Bayesian optimization loop: GP-UCB, GP-TS and enlarged-variance GP-TS with a pluggable
acquisition solver."""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import qmc

from app.core.exceptions import InputError, NumericalError, RunError

from .acquisition import (
    BetaSchedule,
    audit_shift,
    beta,
    enlarged_variance,
    ts_build,
    ts_shift,
    ucb_build,
    ucb_shift,
)
from .choices import AlgorithmChoices, EtaFloorChoices, SolverKindChoices
from .domain import Box
from .gp import information_gain, posterior_init, posterior_update
from .kernels import KernelSpec, default_lengthscale
from .metrics import IterationRecord, RunTrace, instantaneous_regret
from .objectives import KernelExpansion, NoiseModel, ObjectiveSpec, evaluate, observe
from .solvers import SolverSpec, fill_distance, reference_max, solve, solver_grid

logger = logging.getLogger(__name__)

# Independent random streams of a run, combined with the seed and the iteration.
INIT_STREAM = 0
SOLVER_STREAM = 1
TS_STREAM = 2
ORACLE_STREAM = 3
NOISE_STREAM = 4
FILL_STREAM = 5
AUDIT_STREAM = 6

MIN_NOISE_VARIANCE = 1e-6
SHIFT_BOUND_MARGIN = 1.1


@dataclass(frozen=True)
class EtaFloorSchedule:
    """Worst-case solver accuracy eta_floor_t assumed by the algorithm.

    :param kind: ``one`` (exact solver), ``constant`` (`value` at every iteration) or
        ``sqrt_decay`` (``1 - 1 / sqrt(t + 1)``).
    :param value: constant floor, in ``(0, 1]``.
    """

    kind: EtaFloorChoices = EtaFloorChoices.ONE
    value: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.value <= 1.0:
            raise InputError("eta floor must lie in (0, 1]")

    def __call__(self, t: int) -> float:
        if self.kind == EtaFloorChoices.ONE:
            return 1.0
        if self.kind == EtaFloorChoices.CONSTANT:
            return self.value
        return min(max(1.0 - 1.0 / math.sqrt(t + 1), np.finfo(float).tiny), 1.0)

    def as_dict(self) -> dict[str, object]:
        return {"kind": str(self.kind), "value": self.value}


def default_kernel(objective: ObjectiveSpec, output_scale: float = 1.0) -> KernelSpec:
    """Matern 5/2 with a lengthscale of a fifth of the mean side.

    :param objective: objective the prior is placed on; kernel expansions keep their own kernel.
    :param output_scale: prior variance ``k(x, x)``, 1 unless a plan opts into another.
    """
    if isinstance(objective.function, KernelExpansion):
        return objective.function.kernel
    return KernelSpec(lengthscale=default_lengthscale(objective.domain.widths), output_scale=output_scale)


def scaled_output_scale(objective: ObjectiveSpec) -> float:
    """Prior variance ``max(sup |f|, 1)^2`` matching the objective's range."""
    return max(objective.sup_norm, 1.0) ** 2


def norm_bound(objective: ObjectiveSpec) -> float:
    """Estimated bound B on the objective: the RKHS norm of kernel expansions, else ``1.1 sup |f|``."""
    if isinstance(objective.function, KernelExpansion):
        return objective.function.rkhs_norm()
    return SHIFT_BOUND_MARGIN * objective.sup_norm


@dataclass(frozen=True, eq=False)
class BoConfig:
    """A fully resolved run.

    :param algorithm: GP-UCB, GP-TS or enlarged-variance GP-TS.
    :param objective: function to maximize.
    :param kernel: GP prior, `default_kernel` when ``None``.
    :param tau: GP noise variance, ``max(R^2, 1e-6 k(x, x))`` when ``None``.
    :param beta_schedule: exploration schedule.
    :param solver: acquisition solver.
    :param eta_floor: worst-case accuracy schedule, used by enlarged-variance GP-TS.
    :param noise: observation noise.
    :param n_init: size of the Sobol initial design.
    :param T: number of iterations.
    :param seed: root of every random stream of the run.
    :param measure_eta: run the reference oracle each iteration.
    :param B: RKHS norm bound used by the nonnegativity shifts; estimated when ``None``.
    :param scramble_init: scramble the initial design with the seed.
    :param audit_probes: uniform probes of the shifted UCB checked for nonnegativity each
        iteration; Thompson samples are checked on their grid. 0 disables the audit.
    """

    algorithm: AlgorithmChoices
    objective: ObjectiveSpec
    kernel: KernelSpec | None = None
    tau: float | None = None
    beta_schedule: BetaSchedule = field(default_factory=BetaSchedule)
    solver: SolverSpec = field(default_factory=SolverSpec)
    eta_floor: EtaFloorSchedule = field(default_factory=EtaFloorSchedule)
    noise: NoiseModel = field(default_factory=NoiseModel)
    n_init: int = 1
    T: int = 1
    seed: int = 0
    measure_eta: bool = False
    B: float | None = None
    scramble_init: bool = True
    audit_probes: int = 0

    def __post_init__(self) -> None:
        if self.n_init < 1 or self.T < 1:
            raise InputError("n_init and T must be positive")
        if self.seed < 0 or self.audit_probes < 0:
            raise InputError("seed and audit_probes must be nonnegative")
        if self.tau is not None and self.tau <= 0:
            raise InputError("tau must be positive")
        if self.algorithm != AlgorithmChoices.UCB and not self.solver.is_grid:
            raise InputError(f"{self.algorithm} samples on a grid and cannot use the {self.solver.kind} solver")
        if self.algorithm == AlgorithmChoices.TS_ENLARGED and self.shift_bound <= 0:
            raise InputError("enlarged-variance GP-TS needs a positive norm bound B")
        if self.B is None:
            object.__setattr__(self, "B", self.shift_bound)
        if self.kernel is None:
            object.__setattr__(self, "kernel", default_kernel(self.objective))
        if self.tau is None:
            object.__setattr__(self, "tau", max(self.noise.R**2, MIN_NOISE_VARIANCE * self.kernel.output_scale))

    @property
    def shift_bound(self) -> float:
        return self.B if self.B is not None else norm_bound(self.objective)

    @property
    def oracle_size(self) -> int:
        return self.solver.oracle_size

    def as_dict(self) -> dict[str, object]:
        return {
            "algorithm": str(self.algorithm),
            "objective": str(self.objective.name),
            "kernel": self.kernel.as_dict(),
            "tau": self.tau,
            "beta_schedule": self.beta_schedule.as_dict(),
            "solver": self.solver.as_dict(self.objective.dim),
            "eta_floor": self.eta_floor.as_dict(),
            "noise": self.noise.as_dict(),
            "n_init": self.n_init,
            "T": self.T,
            "seed": self.seed,
            "measure_eta": self.measure_eta,
            "B": self.B,
            "scramble_init": self.scramble_init,
            "audit_probes": self.audit_probes,
            "decisions": {
                "info_gain": "realized",
                "ts_joint_law": "correlation_preserving",
                "ts_shift_beta": "current_iteration",
                "eta_oracle": "sobol_plus_touched" if self.algorithm == AlgorithmChoices.UCB else "ts_grid",
                "init_counts_toward_regret": False,
            },
        }


def stream(seed: int, stream_id: int, t: int = 0) -> np.random.Generator:
    """Random generator of one stream at one iteration, independent of all others."""
    return np.random.default_rng([seed, stream_id, t])


def init_design(domain: Box, n_init: int, seed: int, scramble: bool = True) -> np.ndarray:
    """First `n_init` Sobol points mapped onto the box.

    :param scramble: Owen-scramble the sequence with `seed`; the unscrambled sequence ignores it.
    """
    if n_init < 1:
        raise InputError("n_init must be positive")
    sampler = qmc.Sobol(d=domain.dim, scramble=scramble, seed=stream(seed, INIT_STREAM) if scramble else None)
    unit = sampler.random_base2(int(math.ceil(math.log2(n_init))))[:n_init]
    return domain.from_unit(unit)


def _elapsed_ms(start: float) -> float:
    return (time.perf_counter() - start) * 1000.0


def run_bo(cfg: BoConfig) -> RunTrace:
    """Runs one Bayesian optimization trace.

    :raises RunError: wrapping numerical failures with the seed and iteration.
    """
    objective = cfg.objective
    domain = objective.domain
    B = float(cfg.B)
    logger.info(
        f"Starting {cfg.algorithm} on {objective.name} with solver {cfg.solver.kind} (seed={cfg.seed}, T={cfg.T})"
    )

    X0 = init_design(domain, cfg.n_init, cfg.seed, cfg.scramble_init)
    init_rng = stream(cfg.seed, NOISE_STREAM, 0)
    Y0 = [observe(objective, cfg.noise, x, init_rng) for x in X0]
    try:
        gp = posterior_init(cfg.kernel, cfg.tau, X0, Y0)
    except NumericalError as exc:
        raise RunError(str(exc), seed=cfg.seed, iteration=0) from exc
    gamma_prev = information_gain(gp)

    trace = RunTrace(objective=objective.metadata(), config=cfg.as_dict(), seed=cfg.seed)
    cumulative = 0.0
    oracle_solver = cfg.solver.kind == SolverKindChoices.REFERENCE_ORACLE
    for t in range(1, cfg.T + 1):
        solver_rng = stream(cfg.seed, ORACLE_STREAM if oracle_solver else SOLVER_STREAM, t)
        try:
            beta_t = beta(cfg.beta_schedule, t, gamma_prev)
            eta_floor_t = cfg.eta_floor(t)
            start = time.perf_counter()
            if cfg.algorithm == AlgorithmChoices.UCB:
                acq = ucb_build(gp, beta_t, ucb_shift(B))
            else:
                grid = solver_grid(cfg.solver, domain, t, solver_rng)
                v_tilde = enlarged_variance(eta_floor_t, B) if cfg.algorithm == AlgorithmChoices.TS_ENLARGED else 0.0
                shift = ts_shift(grid.shape[0], cfg.beta_schedule.delta, beta_t, v_tilde, B)
                acq = ts_build(gp, grid, beta_t, v_tilde, stream(cfg.seed, TS_STREAM, t), shift)
            build_ms = _elapsed_ms(start)
            shift_min: float | None = None
            if cfg.audit_probes:
                audit = audit_shift(acq, domain, cfg.audit_probes, stream(cfg.seed, AUDIT_STREAM, t))
                shift_min = audit.min_value

            result = solve(cfg.solver, acq, domain, t, solver_rng)
            solve_ms = result.wall_time * 1000.0
            if cfg.algorithm != AlgorithmChoices.UCB:
                solve_ms += build_ms

            eta_hat: float | None = None
            h_t: float | None = None
            if cfg.measure_eta:
                ref = reference_max(
                    acq, domain, cfg.oracle_size, stream(cfg.seed, ORACLE_STREAM, t), extra=result.touched
                )
                ref = max(ref, result.acq_value)
                if ref <= 0.0:
                    logger.warning(f"Shifted acquisition maximum {ref:.3e} is not positive at t={t}")
                else:
                    eta_hat = result.acq_value / ref
                if result.grid_used is not None:
                    h_t = fill_distance(result.grid_used, domain, None, stream(cfg.seed, FILL_STREAM, t))

            x_t = result.x_chosen
            f_x = evaluate(objective, x_t)
            y_t = observe(objective, cfg.noise, x_t, stream(cfg.seed, NOISE_STREAM, t))
            gp = posterior_update(gp, x_t, y_t)
            gamma_t = information_gain(gp)
        except NumericalError as exc:
            raise RunError(str(exc), seed=cfg.seed, iteration=t) from exc

        r_t = instantaneous_regret(objective.f_star, f_x)
        cumulative += r_t
        trace.records.append(
            IterationRecord(
                t=t,
                x=tuple(float(v) for v in x_t),
                y=y_t,
                f_x=f_x,
                r=r_t,
                R=cumulative,
                eta_hat=eta_hat,
                eta_floor=eta_floor_t,
                beta=beta_t,
                gamma=gamma_t,
                solve_ms=solve_ms,
                n_evals=result.n_evals,
                build_ms=build_ms,
                fill_distance=h_t,
                shift_min=shift_min,
            )
        )
        trace.ledger.record(eta_hat, eta_floor_t, beta_t, gamma_t)
        logger.debug(f"t={t} r_t={r_t:.6g} R_t={cumulative:.6g} beta_t={beta_t:.4f} evals={result.n_evals}")
        gamma_prev = gamma_t

    logger.info(f"Finished {cfg.algorithm} on {objective.name} (seed={cfg.seed}) with R_T={cumulative:.6g}")
    return trace


@dataclass
class ReplicateBatch:
    """Surviving traces in replicate order, and the replicates that failed."""

    traces: list[RunTrace]
    failures: list[dict[str, object]] = field(default_factory=list)


def _run_replicate(cfg: BoConfig) -> RunTrace | dict[str, object]:
    try:
        return run_bo(cfg)
    except Exception as e:
        logger.error(f"Replicate with seed {cfg.seed} failed: {e}")
        return {"seed": cfg.seed, "error": str(e)}


def run_replicates(cfg: BoConfig, n_reps: int, parallelism: int = 1) -> ReplicateBatch:
    """Runs `n_reps` replicates with seeds ``cfg.seed + i``.

    :param parallelism: number of worker processes, 1 to run in-process.
    """
    if n_reps < 1:
        raise InputError("n_reps must be positive")
    if parallelism < 1:
        raise InputError("parallelism must be positive")
    configs = [replace(cfg, seed=cfg.seed + i) for i in range(n_reps)]
    if parallelism == 1 or n_reps == 1:
        outcomes = [_run_replicate(config) for config in configs]
    else:
        with ProcessPoolExecutor(max_workers=min(parallelism, n_reps)) as pool:
            outcomes = list(pool.map(_run_replicate, configs))

    batch = ReplicateBatch(traces=[])
    for outcome in outcomes:
        if isinstance(outcome, RunTrace):
            batch.traces.append(outcome)
        else:
            batch.failures.append(outcome)
    return batch


__all__ = [
    "BoConfig",
    "EtaFloorSchedule",
    "ReplicateBatch",
    "default_kernel",
    "scaled_output_scale",
    "init_design",
    "norm_bound",
    "run_bo",
    "run_replicates",
    "stream",
]
