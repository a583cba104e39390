"""Aggregation of results files into per-solver summaries."""

import csv
import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from app.bayesopt.metrics import MIN_DIAGNOSTIC_LENGTH, sublinearity_diagnostic
from app.core.exceptions import InputError

from .plots import write_plots
from .results import ResultRow, format_float, read_rows

SUMMARY_FILE = "summary.csv"
SUMMARY_COLUMNS = (
    "experiment",
    "function",
    "algorithm",
    "solver",
    "n_runs",
    "T",
    "median_R_T",
    "q25_R_T",
    "q75_R_T",
    "median_simple_regret",
    "median_solve_ms",
    "median_M_hat_T",
    "sublinearity_slope",
    "sublinear",
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroupSummary:
    """Statistics over the replicates of one (experiment, function, algorithm, solver) group.

    Curves run over the iterations every replicate reached.
    """

    experiment: str
    function: str
    algorithm: str
    solver: str
    seeds: tuple[int, ...]
    t: np.ndarray
    median_R: np.ndarray
    q25_R: np.ndarray
    q75_R: np.ndarray
    median_simple_regret: float
    median_solve_ms: float
    median_M_hat_T: float | None
    sublinearity_slope: float | None
    sublinear: bool | None

    @property
    def n_runs(self) -> int:
        return len(self.seeds)

    @property
    def T(self) -> int:
        return int(self.t[-1]) if self.t.size else 0

    @property
    def median_R_T(self) -> float:
        return float(self.median_R[-1])

    def as_row(self) -> list[str]:
        sublinear = "" if self.sublinear is None else str(self.sublinear).lower()
        return [
            self.experiment,
            self.function,
            self.algorithm,
            self.solver,
            str(self.n_runs),
            str(self.T),
            format_float(self.median_R_T),
            format_float(float(self.q25_R[-1])),
            format_float(float(self.q75_R[-1])),
            format_float(self.median_simple_regret),
            format_float(self.median_solve_ms),
            format_float(self.median_M_hat_T),
            format_float(self.sublinearity_slope),
            sublinear,
        ]


def _runs(rows: list[ResultRow]) -> dict[int, list[ResultRow]]:
    runs: dict[int, list[ResultRow]] = defaultdict(list)
    for row in rows:
        runs[row.seed].append(row)
    return {seed: sorted(run, key=lambda row: row.t) for seed, run in sorted(runs.items())}


def _M_hat(run: list[ResultRow]) -> float | None:
    if any(row.eta_hat is None for row in run):
        return None
    return float(sum(1.0 - row.eta_hat for row in run))  # type: ignore[operator]


def summarize_group(key: tuple[str, str, str, str], rows: list[ResultRow]) -> GroupSummary:
    """Median and interquartile range of cumulative regret across replicates, with headline
    statistics.

    :param key: experiment, function, algorithm and solver shared by `rows`.
    :param rows: rows of every replicate of the group.
    """
    runs = _runs(rows)
    horizon = min(len(run) for run in runs.values())
    R = np.array([[row.R_t for row in run[:horizon]] for run in runs.values()])
    q25, median, q75 = np.percentile(R, [25, 50, 75], axis=0)
    t = np.array([row.t for row in next(iter(runs.values()))[:horizon]])

    M_hats = [_M_hat(run) for run in runs.values()]
    slope: float | None = None
    sublinear: bool | None = None
    if horizon >= MIN_DIAGNOSTIC_LENGTH:
        report = sublinearity_diagnostic(median)
        slope, sublinear = report.slope, report.sublinear

    experiment, function, algorithm, solver = key
    return GroupSummary(
        experiment=experiment,
        function=function,
        algorithm=algorithm,
        solver=solver,
        seeds=tuple(runs),
        t=t,
        median_R=median,
        q25_R=q25,
        q75_R=q75,
        median_simple_regret=float(np.median([min(row.r_t for row in run) for run in runs.values()])),
        median_solve_ms=float(np.median([sum(row.solve_ms for row in run) for run in runs.values()])),
        median_M_hat_T=None if any(m is None for m in M_hats) else float(np.median(M_hats)),  # type: ignore[arg-type]
        sublinearity_slope=slope,
        sublinear=sublinear,
    )


def summarize_rows(rows: list[ResultRow]) -> list[GroupSummary]:
    """Groups rows by experiment, function, algorithm and solver, in order of first appearance."""
    groups: dict[tuple[str, str, str, str], list[ResultRow]] = {}
    for row in rows:
        groups.setdefault((row.experiment, row.function, row.algorithm, row.solver), []).append(row)
    return [summarize_group(key, group) for key, group in groups.items()]


def write_summary(path: Path, summaries: list[GroupSummary]) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for summary in summaries:
            writer.writerow(summary.as_row())


def summarize(results_dir: str | Path) -> tuple[list[GroupSummary], list[Path]]:
    """Writes ``summary.csv`` and the regret and runtime plots of a results directory.

    :param results_dir: directory holding ``results.csv``.
    :return: group summaries and the files written.
    :raises InputError: when ``results.csv`` is missing.
    :raises SchemaError: when ``results.csv`` lacks a column.
    """
    results_dir = Path(results_dir)
    results_path = results_dir / "results.csv"
    if not results_path.is_file():
        raise InputError(f"{results_path} not found")
    summaries = summarize_rows(read_rows(results_path))

    summary_path = results_dir / SUMMARY_FILE
    write_summary(summary_path, summaries)
    written = [summary_path, *write_plots(results_dir / "plots", summaries)]
    for path in written:
        logger.info(f"Wrote {path}")
    return summaries, written


__all__ = ["GroupSummary", "summarize", "summarize_group", "summarize_rows", "write_summary"]
