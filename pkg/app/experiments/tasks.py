"""Experiment related tasks."""

import logging
from pathlib import Path
from typing import Any

from app.bayesopt.engine import run_bo
from config.celery import app

from .plans import RunPayload, build_config, run_key
from .results import write_run

logger = logging.getLogger(__name__)


@app.task
def execute_run(payload: RunPayload, output_dir: str, oracle_size: int) -> dict[str, Any]:
    """Celery task running one replicate and writing its files under `output_dir`.

    :param payload: run description, as produced by `expand_plan`.
    :param output_dir: results directory.
    :param oracle_size: reference-oracle size used when the entry does not set one.
    :returns: A dictionary with the status and the run key.
    """
    key = run_key(payload)
    try:
        cfg = build_config(payload, oracle_size)
        trace = run_bo(cfg)
        write_run(Path(output_dir), payload, trace)
    except Exception as e:
        logger.error(f"Run {key} failed: {e}")
        return {"status": "failed", "run": key, "seed": payload["seed"], "error": str(e)}

    logger.info(f"Run {key} completed, R_T={trace.records[-1].R:.6g}")
    return {"status": "completed", "run": key}


__all__ = ["execute_run"]
