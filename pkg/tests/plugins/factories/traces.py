"""Run trace factories."""

from collections.abc import Callable, Sequence

import factory
import pytest

from app.bayesopt.metrics import IterationRecord, RunTrace


class _IterationRecordFactory(factory.Factory):
    """Iteration record factory."""

    class Meta:
        """Iteration record factory Meta class."""

        model = IterationRecord

    t = factory.Sequence(lambda n: n + 1)
    x = (0.25, 0.75)
    y = 0.0
    f_x = 0.0
    r = 0.0
    R = 0.0
    eta_hat = None
    eta_floor = 1.0
    beta = 1.0
    gamma = 0.0
    solve_ms = 1.0
    n_evals = 100
    build_ms = 0.1


@pytest.fixture
def create_trace() -> Callable:
    """Pytest fixture for creating a run trace from a sequence of instantaneous regrets.

    The objective maximum is 1, so ``f(x_t) = 1 - r_t``.
    """

    def _factory(
        regrets: Sequence[float],
        seed: int = 0,
        eta_hat: Sequence[float | None] | None = None,
        name: str = "branin",
        algorithm: str = "ucb",
        **kwargs,
    ) -> RunTrace:
        trace = RunTrace(
            objective={"name": name, "dim": 2, "lower": [0.0, 0.0], "upper": [1.0, 1.0], "f_star": 1.0},
            config={"algorithm": algorithm},
            seed=seed,
        )
        cumulative = 0.0
        for t, r in enumerate(regrets, start=1):
            cumulative += r
            eta = eta_hat[t - 1] if eta_hat is not None else None
            record = _IterationRecordFactory.create(
                t=t, y=1.0 - r, f_x=1.0 - r, r=r, R=cumulative, eta_hat=eta, **kwargs
            )
            trace.records.append(record)
            trace.ledger.record(eta, record.eta_floor, record.beta, record.gamma)
        return trace

    return _factory
