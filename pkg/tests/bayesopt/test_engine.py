"""Tests the Bayesian optimization loop."""

from dataclasses import replace

import numpy as np
import pytest

from app.bayesopt import engine
from app.bayesopt.choices import AlgorithmChoices, EtaFloorChoices, SolverKindChoices
from app.bayesopt.domain import Box
from app.bayesopt.engine import (
    BoConfig,
    EtaFloorSchedule,
    default_kernel,
    init_design,
    run_bo,
    run_replicates,
    scaled_output_scale,
)
from app.bayesopt.metrics import RunTrace
from app.core.exceptions import InputError


def _without_timings(trace: RunTrace) -> list:
    return [replace(record, solve_ms=0.0, build_ms=0.0) for record in trace.records]


@pytest.mark.parametrize(
    "kind, value, t, expected",
    [
        (EtaFloorChoices.ONE, 1.0, 5, 1.0),
        (EtaFloorChoices.CONSTANT, 0.4, 5, 0.4),
        (EtaFloorChoices.SQRT_DECAY, 1.0, 3, 0.5),
    ],
)
def test_eta_floor_schedule(kind, value, t, expected) -> None:
    """Tests the worst-case accuracy schedules."""
    assert EtaFloorSchedule(kind=kind, value=value)(t) == pytest.approx(expected)


def test_eta_floor_schedule_rejects_zero() -> None:
    """Tests that a zero floor is rejected."""
    with pytest.raises(InputError):
        EtaFloorSchedule(kind=EtaFloorChoices.CONSTANT, value=0.0)


def test_init_design_is_seeded(create_box) -> None:
    """Tests that the initial design depends only on the seed and stays inside the box."""
    box = create_box(dim=3)

    first = init_design(box, 6, seed=4)

    np.testing.assert_array_equal(first, init_design(box, 6, seed=4))
    assert not np.array_equal(first, init_design(box, 6, seed=5))
    assert first.shape == (6, 3)
    assert all(box.contains(x) for x in first)


def test_unscrambled_init_design_starts_at_the_lower_corner() -> None:
    """Tests that the unscrambled Sobol design starts at the lower corner."""
    box = Box(lower=(-1.0, 2.0), upper=(1.0, 4.0))

    np.testing.assert_array_equal(init_design(box, 1, seed=9, scramble=False)[0], [-1.0, 2.0])


def test_config_rejects_ts_with_local_search(create_config) -> None:
    """Tests that Thompson sampling needs a grid solver."""
    with pytest.raises(InputError):
        create_config(algorithm=AlgorithmChoices.TS, solver=SolverKindChoices.MULTISTART_SIMPLEX)


def test_config_rejects_enlarged_ts_without_bound(create_config) -> None:
    """Tests that enlarged-variance Thompson sampling needs a positive norm bound."""
    with pytest.raises(InputError):
        create_config(algorithm=AlgorithmChoices.TS_ENLARGED, B=0.0)


def test_config_resolves_defaults(create_config) -> None:
    """Tests that the kernel, noise variance and norm bound are filled in."""
    cfg = create_config()

    assert cfg.kernel is not None
    assert cfg.kernel.output_scale == 1.0
    assert cfg.tau == pytest.approx(1e-6)
    assert cfg.B == pytest.approx(1.1 * cfg.objective.sup_norm)
    assert cfg.as_dict()["solver"]["kind"] == "uniform_grid"


def test_scaled_prior_is_opt_in(create_config) -> None:
    """Tests that a prior variance matching the objective's range is only used when asked for."""
    objective = create_config().objective
    kernel = default_kernel(objective, scaled_output_scale(objective))

    cfg = create_config(kernel=kernel)

    assert default_kernel(objective).output_scale == 1.0
    assert cfg.kernel.output_scale == pytest.approx(objective.sup_norm**2)
    assert cfg.tau == pytest.approx(1e-6 * objective.sup_norm**2)


@pytest.mark.parametrize("n_init, T", [(0, 5), (4, 0)])
def test_config_rejects_empty_runs(create_config, n_init, T) -> None:
    """Tests that the initial design and the horizon must be positive."""
    with pytest.raises(InputError):
        create_config(n_init=n_init, T=T)


def test_reference_oracle_solver_is_exact(create_config) -> None:
    """Tests that solving with the reference oracle measures an accuracy of one."""
    trace = run_bo(create_config(solver=SolverKindChoices.REFERENCE_ORACLE, T=1, measure_eta=True))

    assert trace.T == 1
    assert trace.records[0].eta_hat == pytest.approx(1.0)
    assert trace.ledger.M_hat[-1] == pytest.approx(0.0)


def test_run_records_regret(create_config) -> None:
    """Tests that each record accounts regret against the objective optimum."""
    trace = run_bo(create_config(T=6))

    assert trace.T == 6
    R = 0.0
    for t, record in enumerate(trace.records, start=1):
        R += record.r
        assert record.t == t
        assert record.r == pytest.approx(trace.f_star - record.f_x)
        assert record.r >= -1e-9
        assert record.R == pytest.approx(R)
        assert record.n_evals == 10 * t
        assert record.eta_hat is None
    assert np.all(np.diff([record.gamma for record in trace.records]) > 0)


def test_run_is_deterministic(create_config) -> None:
    """Tests that the same seed reproduces the trace up to timings."""
    first = run_bo(create_config(solver=SolverKindChoices.MULTISTART_LBFGSB))
    second = run_bo(create_config(solver=SolverKindChoices.MULTISTART_LBFGSB))

    assert _without_timings(first) == _without_timings(second)


def test_seeds_change_the_run(create_config) -> None:
    """Tests that different seeds give different traces."""
    first = run_bo(create_config(seed=0))
    second = run_bo(create_config(seed=1))

    assert [record.x for record in first.records] != [record.x for record in second.records]


@pytest.mark.parametrize("algorithm", [AlgorithmChoices.TS, AlgorithmChoices.TS_ENLARGED])
def test_thompson_sampling_runs(create_config, algorithm) -> None:
    """Tests Thompson sampling runs with measured accuracy on their own grid."""
    trace = run_bo(
        create_config(
            algorithm=algorithm,
            eta_floor=EtaFloorSchedule(kind=EtaFloorChoices.CONSTANT, value=0.5),
            measure_eta=True,
            T=3,
        )
    )

    assert trace.T == 3
    for record in trace.records:
        assert record.eta_hat == pytest.approx(1.0)
        assert record.eta_floor == 0.5
        assert record.fill_distance is not None
    assert trace.ledger.M[-1] == pytest.approx(1.5)


def test_measured_accuracy_of_local_search(create_config) -> None:
    """Tests that a local search measures an accuracy in (0, 1]."""
    trace = run_bo(create_config(solver=SolverKindChoices.MULTISTART_SIMPLEX, measure_eta=True, T=3))

    for record in trace.records:
        assert 0.0 < record.eta_hat <= 1.0
        assert record.fill_distance is None


def test_shift_audit_is_recorded(create_config) -> None:
    """Tests that auditing records the smallest shifted acquisition value."""
    trace = run_bo(create_config(audit_probes=64, T=2))

    assert all(record.shift_min is not None for record in trace.records)
    assert all(record.shift_min is None for record in run_bo(create_config(T=2)).records)


def test_run_replicates_in_parallel(create_config) -> None:
    """Tests that parallel replicates equal sequential ones up to timings."""
    cfg = create_config(T=3)

    sequential = run_replicates(cfg, 3)
    parallel = run_replicates(cfg, 3, parallelism=2)

    assert [trace.seed for trace in sequential.traces] == [0, 1, 2]
    assert not sequential.failures
    for left, right in zip(sequential.traces, parallel.traces, strict=True):
        assert _without_timings(left) == _without_timings(right)


def test_run_replicates_rejects_invalid_counts(create_config) -> None:
    """Tests that replicate and worker counts must be positive."""
    cfg = create_config()

    with pytest.raises(InputError):
        run_replicates(cfg, 0)
    with pytest.raises(InputError):
        run_replicates(cfg, 1, parallelism=0)


def test_enlarged_thompson_sampling_with_exact_solver_is_thompson_sampling(create_config) -> None:
    """Tests that enlarged-variance Thompson sampling assuming an exact solver reproduces plain
    Thompson sampling."""
    plain = run_bo(create_config(algorithm=AlgorithmChoices.TS, measure_eta=True))
    enlarged = run_bo(
        create_config(algorithm=AlgorithmChoices.TS_ENLARGED, eta_floor=EtaFloorSchedule(), measure_eta=True)
    )

    assert _without_timings(enlarged) == _without_timings(plain)


def test_run_replicates_isolates_failures(create_config, monkeypatch) -> None:
    """Tests that a replicate failing with any error is reported while the others are kept."""
    run = engine.run_bo

    def failing_run_bo(cfg: BoConfig) -> RunTrace:
        if cfg.seed == 1:
            raise np.linalg.LinAlgError("Matrix is not positive definite")
        return run(cfg)

    monkeypatch.setattr(engine, "run_bo", failing_run_bo)

    batch = run_replicates(create_config(T=2), 3)

    assert [trace.seed for trace in batch.traces] == [0, 2]
    assert batch.failures == [{"seed": 1, "error": "Matrix is not positive definite"}]
