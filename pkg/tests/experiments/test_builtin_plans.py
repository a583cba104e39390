"""Tests the built-in plans end to end."""

from dataclasses import replace

import numpy as np
import pytest

from app.experiments.plans import build_config, builtin_plan_names, expand_plan, load_plan
from app.experiments.results import read_rows
from app.experiments.runner import RESULTS_FILE, execute_plan
from app.experiments.summary import summarize


@pytest.mark.slow
@pytest.mark.parametrize("name", builtin_plan_names())
def test_builtin_plan_resolves(name) -> None:
    """Tests that every run of a built-in plan resolves into a configuration."""
    for payload in expand_plan(load_plan(name)):
        cfg = build_config(payload)
        assert cfg.T == payload["settings"]["T"]


@pytest.mark.slow
def test_solver_comparison_on_branin(tmp_path) -> None:
    """Tests a shortened Branin block of the solver comparison with every solver."""
    plan = load_plan("solver-comparison")
    branin = plan.entries[0]
    settings = {**branin.settings, "n_reps": 2, "T": 10}
    plan = replace(plan, entries=(replace(branin, settings=settings),))

    report = execute_plan(plan, tmp_path, workers=2)

    assert len(report.completed) == 8
    rows = read_rows(tmp_path / RESULTS_FILE)
    assert len(rows) == 80
    assert all(np.isfinite(row.R_t) and row.r_t >= -1e-9 for row in rows)
    assert [row.n_evals for row in rows if row.solver == "uniform_grid" and row.seed == 0] == [
        100 * t for t in range(1, 11)
    ]

    summaries, _ = summarize(tmp_path)

    assert {summary.solver for summary in summaries} == {
        "uniform_grid",
        "multistart_lbfgsb",
        "multistart_simplex",
        "multistart_cg",
    }
    assert all(summary.sublinear is not None for summary in summaries)
