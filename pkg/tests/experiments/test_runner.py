"""Tests plan execution."""

import json

import pytest

from app.core.exceptions import RunError
from app.experiments import tasks
from app.experiments.plans import expand_plan, parse_plan_text, plan_hash, run_key
from app.experiments.results import header, read_rows
from app.experiments.runner import MANIFEST_FILE, RESULTS_FILE, execute_plan, plan_dim
from app.experiments.tasks import execute_run


@pytest.fixture
def failing_seed(monkeypatch):
    """Pytest fixture making every run with the given seed fail."""

    def _factory(seed: int) -> None:
        run_bo = tasks.run_bo

        def _run_bo(cfg):
            if cfg.seed == seed:
                raise RunError("Cholesky factorization failed", seed=cfg.seed, iteration=1)
            return run_bo(cfg)

        monkeypatch.setattr(tasks, "run_bo", _run_bo)

    return _factory


def test_empty_plan(empty_plan_text, tmp_path) -> None:
    """Tests that a plan without experiments writes a header-only results file."""
    plan = parse_plan_text(empty_plan_text)

    report = execute_plan(plan, tmp_path)

    assert report.total == 0
    assert plan_dim(plan) == 0
    assert (tmp_path / RESULTS_FILE).read_text(encoding="utf-8") == ",".join(header(0)) + "\n"
    manifest = json.loads((tmp_path / MANIFEST_FILE).read_text(encoding="utf-8"))
    assert manifest["runs"] == []
    assert manifest["plan"]["name"] == "empty"


def test_execute_run_task(plan_text, tmp_path) -> None:
    """Tests that the run task writes the run files and reports completion."""
    payload = expand_plan(parse_plan_text(plan_text))[0]

    status = execute_run(payload, str(tmp_path), 256)

    assert status == {"status": "completed", "run": run_key(payload)}
    assert (tmp_path / "runs" / f"{run_key(payload)}.json").is_file()


def test_execute_plan(plan_text, tmp_path) -> None:
    """Tests that every run of a plan lands in the results file in plan order."""
    plan = parse_plan_text(plan_text)

    report = execute_plan(plan, tmp_path)

    assert len(report.completed) == 4
    assert not report.skipped and not report.failures
    rows = read_rows(tmp_path / RESULTS_FILE)
    assert len(rows) == 16
    assert [(row.solver, row.seed) for row in rows[::4]] == [
        ("uniform_grid", 3),
        ("uniform_grid", 4),
        ("multistart_simplex", 3),
        ("multistart_simplex", 4),
    ]
    assert [row.t for row in rows[:4]] == [1, 2, 3, 4]
    manifest = json.loads((tmp_path / MANIFEST_FILE).read_text(encoding="utf-8"))
    assert manifest["plan"]["hash"] == plan_hash(plan)
    assert manifest["seeds"] == [3, 4]
    assert len(manifest["runs"]) == 4
    assert manifest["runs"][0]["config"]["solver"]["kind"] == "uniform_grid"
    assert manifest["failures"] == []


def test_rerun_skips_completed_runs(plan_text, tmp_path) -> None:
    """Tests that rerunning a finished plan skips every run and rewrites identical files."""
    plan = parse_plan_text(plan_text)
    execute_plan(plan, tmp_path)
    results = (tmp_path / RESULTS_FILE).read_bytes()
    manifest = (tmp_path / MANIFEST_FILE).read_bytes()

    report = execute_plan(plan, tmp_path)

    assert len(report.skipped) == 4
    assert not report.completed
    assert (tmp_path / RESULTS_FILE).read_bytes() == results
    assert (tmp_path / MANIFEST_FILE).read_bytes() == manifest


def test_parallel_execution(plan_text, tmp_path) -> None:
    """Tests that a worker pool gives the same rows as in-process execution, up to timings."""
    plan = parse_plan_text(plan_text)

    execute_plan(plan, tmp_path / "serial")
    execute_plan(plan, tmp_path / "pool", workers=2)

    def _untimed(directory):
        return [(row.seed, row.t, row.x, row.R_t) for row in read_rows(directory / RESULTS_FILE)]

    assert _untimed(tmp_path / "serial") == _untimed(tmp_path / "pool")


def test_failed_runs_are_reported(plan_text, tmp_path, failing_seed) -> None:
    """Tests that failing runs are recorded and left out of the results."""
    failing_seed(4)

    report = execute_plan(parse_plan_text(plan_text), tmp_path)

    assert len(report.completed) == 2
    assert [failure["seed"] for failure in report.failures] == [4, 4]
    assert "t=1" in report.failures[0]["error"]
    assert not report.all_failed
    assert {row.seed for row in read_rows(tmp_path / RESULTS_FILE)} == {3}
    manifest = json.loads((tmp_path / MANIFEST_FILE).read_text(encoding="utf-8"))
    assert [failure["run"] for failure in manifest["failures"]] == [
        "branin-small__multistart_simplex__s4",
        "branin-small__uniform_grid__s4",
    ]


def test_failed_runs_are_retried(plan_text, tmp_path, failing_seed, monkeypatch) -> None:
    """Tests that a rerun executes only the runs that failed."""
    plan = parse_plan_text(plan_text)
    failing_seed(4)
    execute_plan(plan, tmp_path)
    monkeypatch.undo()

    report = execute_plan(plan, tmp_path)

    assert len(report.skipped) == 2
    assert len(report.completed) == 2
    assert len(read_rows(tmp_path / RESULTS_FILE)) == 16


def test_all_runs_failing(plan_text, tmp_path, failing_seed) -> None:
    """Tests that a plan whose runs all fail is flagged."""
    failing_seed(3)

    report = execute_plan(parse_plan_text(plan_text.replace("n_reps = 2", "n_reps = 1")), tmp_path)

    assert report.all_failed
    assert read_rows(tmp_path / RESULTS_FILE) == []


def test_celery_execution(plan_text, tmp_path) -> None:
    """Tests that dispatching to eager Celery tasks gives the same rows as in-process execution."""
    plan = parse_plan_text(plan_text.replace("n_reps = 2", "n_reps = 1"))

    report = execute_plan(plan, tmp_path / "celery", use_celery=True)
    execute_plan(plan, tmp_path / "serial")

    assert len(report.completed) == 2
    celery_rows = [(row.solver, row.t, row.x) for row in read_rows(tmp_path / "celery" / RESULTS_FILE)]
    serial_rows = [(row.solver, row.t, row.x) for row in read_rows(tmp_path / "serial" / RESULTS_FILE)]
    assert celery_rows == serial_rows
