"""SVG plots of summaries: cumulative regret curves and solver runtime bars."""

import io
import json
import re
from collections.abc import Sequence
from pathlib import Path
from typing import TYPE_CHECKING, Any

import matplotlib

matplotlib.use("Agg")

from matplotlib import rc_context  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

if TYPE_CHECKING:
    from .summary import GroupSummary

SERIES_TAG = "bo-series"
_SERIES_COMMENT = re.compile(rf"<!-- {SERIES_TAG} (?P<data>.*?) -->", re.DOTALL)
_RC = {"svg.hashsalt": SERIES_TAG, "svg.fonttype": "none"}
FIGURE_SIZE = (6.4, 4.2)


def _label(summary: "GroupSummary", qualify: bool) -> str:
    label = f"{summary.solver} ({summary.algorithm})"
    return f"{summary.experiment}/{label}" if qualify else label


def _render(figure: Figure, series: dict[str, Any]) -> str:
    """SVG text of `figure` with `series` embedded as a JSON comment after the XML declaration."""
    buffer = io.StringIO()
    with rc_context(_RC):
        figure.savefig(buffer, format="svg", metadata={"Date": None})
    declaration, _, body = buffer.getvalue().partition("\n")
    comment = f"<!-- {SERIES_TAG} {json.dumps(series, sort_keys=True)} -->"
    return f"{declaration}\n{comment}\n{body}"


def read_series(svg: str) -> dict[str, Any]:
    """Plotted numbers embedded in an SVG written by this module."""
    match = _SERIES_COMMENT.search(svg)
    if match is None:
        raise ValueError(f"no {SERIES_TAG} comment found")
    return json.loads(match.group("data"))


def regret_svg(function: str, summaries: Sequence["GroupSummary"]) -> str:
    """Median cumulative regret against the iteration, with the interquartile band, one line per
    solver."""
    qualify = len({summary.experiment for summary in summaries}) > 1
    figure = Figure(figsize=FIGURE_SIZE)
    ax = figure.add_subplot()
    series = []
    for summary in summaries:
        label = _label(summary, qualify)
        (line,) = ax.plot(summary.t, summary.median_R, label=label, linewidth=1.5)
        ax.fill_between(summary.t, summary.q25_R, summary.q75_R, color=line.get_color(), alpha=0.2, linewidth=0)
        series.append(
            {
                "label": label,
                "t": summary.t.tolist(),
                "median": summary.median_R.tolist(),
                "q25": summary.q25_R.tolist(),
                "q75": summary.q75_R.tolist(),
            }
        )
    ax.set_title(f"Cumulative regret: {function}")
    ax.set_xlabel("iteration t")
    ax.set_ylabel("R_t (median, IQR)")
    ax.grid(alpha=0.3)
    ax.legend(fontsize="small")
    figure.tight_layout()
    return _render(figure, {"function": function, "kind": "regret", "series": series})


def runtime_svg(function: str, summaries: Sequence["GroupSummary"]) -> str:
    """Median total acquisition-solve time per solver."""
    qualify = len({summary.experiment for summary in summaries}) > 1
    labels = [_label(summary, qualify) for summary in summaries]
    values = [summary.median_solve_ms for summary in summaries]
    figure = Figure(figsize=FIGURE_SIZE)
    ax = figure.add_subplot()
    ax.bar(range(len(values)), values, color="tab:blue")
    ax.set_xticks(range(len(labels)), labels, rotation=30, ha="right", fontsize="small")
    ax.set_title(f"Acquisition solve time: {function}")
    ax.set_ylabel("total solve time (ms, median)")
    ax.grid(axis="y", alpha=0.3)
    figure.tight_layout()
    series = [{"label": label, "median_solve_ms": value} for label, value in zip(labels, values, strict=True)]
    return _render(figure, {"function": function, "kind": "runtime", "series": series})


def write_plots(plots_dir: Path, summaries: Sequence["GroupSummary"]) -> list[Path]:
    """Writes ``regret_<function>.svg`` and ``runtime_<function>.svg`` for every function.

    :return: paths written, in order of first appearance of each function.
    """
    by_function: dict[str, list[GroupSummary]] = {}
    for summary in summaries:
        by_function.setdefault(summary.function, []).append(summary)
    if not by_function:
        return []

    plots_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for function, group in by_function.items():
        for kind, render in (("regret", regret_svg), ("runtime", runtime_svg)):
            path = plots_dir / f"{kind}_{function}.svg"
            path.write_text(render(function, group), encoding="utf-8")
            written.append(path)
    return written


__all__ = ["read_series", "regret_svg", "runtime_svg", "write_plots"]
