"""Plan execution: dispatching runs, merging results and writing the manifest."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version
from itertools import repeat
from pathlib import Path
from typing import Any

from celery import group

from app.bayesopt.kernels import DEFAULT_LENGTHSCALE_FRACTION
from app.bayesopt.objectives import DEFAULT_NOISE_FRACTION
from app.bayesopt.solvers import DEFAULT_ORACLE_SIZE, DEFAULT_STARTS_PER_DIM

from .plans import ExperimentPlan, RunPayload, entry_dim, expand_plan, plan_hash, run_key, serialize_plan
from .results import SCHEMA_VERSION, read_json, read_rows, run_completed, run_paths, write_json, write_rows
from .tasks import execute_run

logger = logging.getLogger(__name__)

RESULTS_FILE = "results.csv"
MANIFEST_FILE = "manifest.json"
REPORTED_PACKAGES = ("numpy", "scipy", "django", "djangorestframework", "celery", "matplotlib")


@dataclass
class ExecutionReport:
    """Outcome of one invocation of `execute_plan`."""

    output_dir: Path
    plan_hash: str
    completed: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    failures: list[dict[str, Any]] = field(default_factory=list)

    @property
    def total(self) -> int:
        return len(self.completed) + len(self.skipped) + len(self.failures)

    @property
    def all_failed(self) -> bool:
        return bool(self.failures) and not self.completed and not self.skipped


def _execute(payload: RunPayload, output_dir: str, oracle_size: int) -> dict[str, Any]:
    return execute_run(payload, output_dir, oracle_size)


def _dispatch(
    payloads: list[RunPayload], output_dir: Path, workers: int, use_celery: bool, oracle_size: int
) -> list[dict[str, Any]]:
    if not payloads:
        return []
    if use_celery:
        job = group(execute_run.s(payload, str(output_dir), oracle_size) for payload in payloads)
        # Eager results cannot be joined through the result backend
        return [result.get(disable_sync_subtasks=False) for result in job.apply_async().results]
    if workers == 1:
        return [_execute(payload, str(output_dir), oracle_size) for payload in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_execute, payloads, repeat(str(output_dir)), repeat(oracle_size)))


def plan_dim(plan: ExperimentPlan) -> int:
    """Largest input dimension of the plan's objectives, 0 for an empty plan."""
    return max((entry_dim(entry.settings) for entry in plan.entries), default=0)


def merge_results(output_dir: Path, plan: ExperimentPlan, payloads: list[RunPayload]) -> int:
    """Concatenates completed run traces into ``results.csv``, in plan order.

    :return: number of rows written.
    """
    rows = []
    for payload in payloads:
        if run_completed(output_dir, payload):
            rows.extend(read_rows(run_paths(output_dir, payload)[0]))
    write_rows(output_dir / RESULTS_FILE, rows, plan_dim(plan))
    return len(rows)


def package_versions() -> dict[str, str]:
    versions = {}
    for package in REPORTED_PACKAGES:
        try:
            versions[package] = version(package)
        except PackageNotFoundError:
            versions[package] = "unknown"
    return versions


def build_manifest(
    output_dir: Path, plan: ExperimentPlan, payloads: list[RunPayload], failures: list[dict[str, Any]]
) -> dict[str, Any]:
    """Manifest of a results directory: the plan, every completed run's resolved configuration and
    the defaults applied."""
    runs = []
    for payload in payloads:
        if run_completed(output_dir, payload):
            metadata = read_json(run_paths(output_dir, payload)[1])
            metadata.pop("plan_hash", None)
            runs.append(metadata)
    return {
        "schema_version": SCHEMA_VERSION,
        "plan": {
            "name": plan.name,
            "description": plan.description,
            "hash": plan_hash(plan),
            "seed": plan.seed,
            "text": serialize_plan(plan),
        },
        "seeds": sorted({payload["seed"] for payload in payloads}),
        "runs": runs,
        "failures": sorted(failures, key=lambda failure: failure["run"]),
        "packages": package_versions(),
        "defaults": {
            "lengthscale_fraction": DEFAULT_LENGTHSCALE_FRACTION,
            "noise_fraction": DEFAULT_NOISE_FRACTION,
            "starts_per_dim": DEFAULT_STARTS_PER_DIM,
            "oracle_size": DEFAULT_ORACLE_SIZE,
            "output_scale": 1.0,
            "norm_bound": "rkhs_norm for synthetic objectives, else 1.1 sup|f|",
            "replicate_seeds": "plan seed + replicate index, shared across solvers",
        },
    }


def execute_plan(
    plan: ExperimentPlan,
    output_dir: str | Path,
    workers: int = 1,
    use_celery: bool = False,
    oracle_size: int = DEFAULT_ORACLE_SIZE,
) -> ExecutionReport:
    """Runs every pending run of a plan, then merges results and writes the manifest.

    Runs already completed under the same plan hash are skipped, so an interrupted invocation can
    be resumed.

    :param plan: validated plan.
    :param output_dir: results directory, created if missing.
    :param workers: worker processes; 1 runs in-process.
    :param use_celery: dispatch runs as a Celery group instead of a local pool.
    :param oracle_size: reference-oracle size for entries that do not set one.
    :return: `ExecutionReport`.
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    payloads = expand_plan(plan)
    report = ExecutionReport(output_dir=output_dir, plan_hash=plan_hash(plan))

    pending = []
    for payload in payloads:
        if run_completed(output_dir, payload):
            report.skipped.append(run_key(payload))
        else:
            pending.append(payload)
    if report.skipped:
        logger.info(f"Skipping {len(report.skipped)} run(s) already completed for plan {plan.name}")
    logger.info(f"Executing {len(pending)} run(s) of plan {plan.name} with {workers} worker(s)")

    for status in _dispatch(pending, output_dir, workers, use_celery, oracle_size):
        if status["status"] == "completed":
            report.completed.append(status["run"])
        else:
            report.failures.append({key: status[key] for key in ("run", "seed", "error")})
            logger.warning(f"Run {status['run']} failed: {status['error']}")

    n_rows = merge_results(output_dir, plan, payloads)
    write_json(output_dir / MANIFEST_FILE, build_manifest(output_dir, plan, payloads, report.failures))
    logger.info(
        f"Plan {plan.name}: {len(report.completed)} completed, {len(report.skipped)} skipped, "
        f"{len(report.failures)} failed, {n_rows} row(s) in {RESULTS_FILE}"
    )
    return report


__all__ = ["ExecutionReport", "build_manifest", "execute_plan", "merge_results", "plan_dim"]
