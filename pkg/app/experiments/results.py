"""Results files: the per-iteration CSV format and JSON manifests."""

import csv
import json
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from app.bayesopt.metrics import RunTrace, simple_regret
from app.core.exceptions import SchemaError

from .plans import RunPayload, run_key

SCHEMA_VERSION = "1"
HEAD_COLUMNS = ("experiment", "function", "algorithm", "solver", "seed", "t")
TAIL_COLUMNS = (
    "y",
    "r_t",
    "R_t",
    "eta_hat",
    "beta_t",
    "gamma_t",
    "solve_ms",
    "n_evals",
    "build_ms",
    "fill_distance",
)
_X_COLUMN = re.compile(r"^x(\d+)$")


@dataclass(frozen=True)
class ResultRow:
    """One row of ``results.csv``: one iteration of one run."""

    experiment: str
    function: str
    algorithm: str
    solver: str
    seed: int
    t: int
    x: tuple[float, ...]
    y: float
    r_t: float
    R_t: float
    eta_hat: float | None
    beta_t: float
    gamma_t: float
    solve_ms: float
    n_evals: int
    build_ms: float
    fill_distance: float | None = None


def header(dim: int) -> list[str]:
    """Column names for points of dimension up to `dim`."""
    return [*HEAD_COLUMNS, *(f"x{i}" for i in range(dim)), *TAIL_COLUMNS]


def format_float(value: float | None) -> str:
    """17 significant digits, so that parsing gives back the same float; empty for null."""
    return "" if value is None else f"{value:.17g}"


def _parse_float(value: str) -> float | None:
    return None if value == "" else float(value)


def rows_from_trace(trace: RunTrace, experiment: str, solver: str) -> list[ResultRow]:
    """Result rows of a run, one per iteration."""
    function = str(trace.objective["name"])
    algorithm = str(trace.config["algorithm"])
    return [
        ResultRow(
            experiment=experiment,
            function=function,
            algorithm=algorithm,
            solver=solver,
            seed=trace.seed,
            t=record.t,
            x=record.x,
            y=record.y,
            r_t=record.r,
            R_t=record.R,
            eta_hat=record.eta_hat,
            beta_t=record.beta,
            gamma_t=record.gamma,
            solve_ms=record.solve_ms,
            n_evals=record.n_evals,
            build_ms=record.build_ms,
            fill_distance=record.fill_distance,
        )
        for record in trace.records
    ]


def _encode(row: ResultRow, dim: int) -> list[str]:
    x = [format_float(v) for v in row.x] + [""] * (dim - len(row.x))
    return [
        row.experiment,
        row.function,
        row.algorithm,
        row.solver,
        str(row.seed),
        str(row.t),
        *x,
        format_float(row.y),
        format_float(row.r_t),
        format_float(row.R_t),
        format_float(row.eta_hat),
        format_float(row.beta_t),
        format_float(row.gamma_t),
        format_float(row.solve_ms),
        str(row.n_evals),
        format_float(row.build_ms),
        format_float(row.fill_distance),
    ]


def write_rows(path: Path, rows: Iterable[ResultRow], dim: int) -> None:
    """Writes rows under the header for dimension `dim`; shorter points leave trailing x empty."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header(dim))
        for row in rows:
            writer.writerow(_encode(row, dim))


def _check_columns(columns: Sequence[str], path: Path) -> list[str]:
    for column in (*HEAD_COLUMNS, *TAIL_COLUMNS):
        if column not in columns:
            raise SchemaError(column, path=str(path))
    x_columns = sorted((c for c in columns if _X_COLUMN.match(c)), key=lambda c: int(c[1:]))
    for i, column in enumerate(x_columns):
        if column != f"x{i}":
            raise SchemaError(f"x{i}", path=str(path))
    return x_columns


def read_rows(path: Path) -> list[ResultRow]:
    """Reads a results file.

    :raises SchemaError: naming the first required column the file lacks.
    """
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        x_columns = _check_columns(reader.fieldnames or [], path)
        rows = []
        for record in reader:
            x = tuple(float(record[c]) for c in x_columns if record[c] != "")
            rows.append(
                ResultRow(
                    experiment=record["experiment"],
                    function=record["function"],
                    algorithm=record["algorithm"],
                    solver=record["solver"],
                    seed=int(record["seed"]),
                    t=int(record["t"]),
                    x=x,
                    y=float(record["y"]),
                    r_t=float(record["r_t"]),
                    R_t=float(record["R_t"]),
                    eta_hat=_parse_float(record["eta_hat"]),
                    beta_t=float(record["beta_t"]),
                    gamma_t=float(record["gamma_t"]),
                    solve_ms=float(record["solve_ms"]),
                    n_evals=int(record["n_evals"]),
                    build_ms=float(record["build_ms"]),
                    fill_distance=_parse_float(record["fill_distance"]),
                )
            )
    return rows


RUNS_DIR = "runs"


def run_paths(output_dir: Path, payload: RunPayload) -> tuple[Path, Path]:
    """Private trace file and metadata file of a run."""
    stem = output_dir / RUNS_DIR / run_key(payload)
    return stem.with_suffix(".csv"), stem.with_suffix(".json")


def run_completed(output_dir: Path, payload: RunPayload) -> bool:
    """Whether this plan already completed this run; the metadata file is written last."""
    trace_path, meta_path = run_paths(output_dir, payload)
    if not (trace_path.is_file() and meta_path.is_file()):
        return False
    return read_json(meta_path).get("plan_hash") == payload["plan_hash"]


def run_summary(trace: RunTrace) -> dict[str, Any]:
    """Timing-free headline numbers of a run."""
    summary: dict[str, Any] = {
        "T": trace.T,
        "R_T": trace.records[-1].R if trace.records else 0.0,
        "simple_regret": simple_regret(trace) if trace.records else None,
        "M_T": trace.ledger.M[-1] if trace.ledger.M else 0.0,
        "M_hat_T": trace.ledger.M_hat[-1] if trace.ledger.measured else None,
        "gamma_T": trace.records[-1].gamma if trace.records else 0.0,
    }
    audited = [record.shift_min for record in trace.records if record.shift_min is not None]
    if audited:
        summary["shift_audit"] = {
            "iterations": len(audited),
            "nonnegative": sum(1 for value in audited if value >= 0.0),
            "min_value": min(audited),
        }
    return summary


def write_run(output_dir: Path, payload: RunPayload, trace: RunTrace) -> None:
    """Writes the private trace file of a run, then its metadata file."""
    trace_path, meta_path = run_paths(output_dir, payload)
    dim = len(trace.objective["lower"])  # type: ignore[arg-type]
    write_rows(trace_path, rows_from_trace(trace, payload["experiment"], payload["solver"]), dim)
    write_json(
        meta_path,
        {
            "plan_hash": payload["plan_hash"],
            "run": run_key(payload),
            "experiment": payload["experiment"],
            "solver": payload["solver"],
            "seed": payload["seed"],
            "config": trace.config,
            "objective": trace.objective,
            "summary": run_summary(trace),
        },
    )


def dump_json(data: Any) -> str:
    """Deterministic JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def write_json(path: Path, data: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_json(data), encoding="utf-8")


def read_json(path: Path) -> Any:
    return json.loads(path.read_text(encoding="utf-8"))


__all__ = [
    "SCHEMA_VERSION",
    "ResultRow",
    "run_completed",
    "run_paths",
    "run_summary",
    "write_run",
    "dump_json",
    "format_float",
    "header",
    "read_json",
    "read_rows",
    "rows_from_trace",
    "write_json",
    "write_rows",
]
