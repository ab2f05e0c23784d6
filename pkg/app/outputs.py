"""
Run outputs: manifest.json, report.json and replicas.csv.

report.json holds only seeded quantities, so two runs with the same config
and seed produce byte-identical files regardless of the worker count.  Wall
time and package versions live in manifest.json.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import platform
from importlib import metadata
from pathlib import Path
from typing import Any

import numpy as np

from .config import ExperimentConfig
from .estimators.common import EstimatorResult
from .replicas import RunContext
from .rng import label_scheme

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
REPORT = "report.json"
REPLICAS = "replicas.csv"

PACKAGES = ("numpy", "scipy", "numba", "Flask", "Flask-SQLAlchemy", "python-dotenv")


def to_jsonable(value: Any) -> Any:
    """Plain Python values for json; NaN and infinities become null."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def package_versions() -> dict[str, str | None]:
    versions: dict[str, str | None] = {"python": platform.python_version()}
    for name in PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = None
    return versions


def _dump(path: Path, data: Any) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(to_jsonable(data), handle, indent=2, sort_keys=True, allow_nan=False, ensure_ascii=False)
        handle.write("\n")


def write_report(directory: Path, result: EstimatorResult) -> Path:
    path = directory / REPORT
    _dump(path, {
        "subcommand": result.subcommand,
        "report": result.report,
        "inconclusive": result.inconclusive,
        "flags": result.flags,
    })
    return path


def _cell(value: Any) -> Any:
    value = to_jsonable(value)
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def write_csv(directory: Path, result: EstimatorResult, ctx: RunContext | None = None) -> Path:
    """One row per replica record in the subcommand's column order; aborted replicas carry `error`."""
    path = directory / REPLICAS
    columns = [*result.columns, "error"]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in result.rows:
            writer.writerow([_cell(row.get(c, "")) for c in result.columns] + [""])
        for aborted in ctx.abort_rows() if ctx is not None else []:
            writer.writerow([_cell(aborted.get(c, "")) if c == "replica" else "" for c in result.columns]
                            + [aborted["error"]])
    return path


def write_manifest(
    directory: Path,
    config: ExperimentConfig,
    ctx: RunContext,
    wall_seconds: float,
    threads: int,
    exit_code: int = 0,
) -> Path:
    path = directory / MANIFEST
    _dump(path, {
        "config": config.to_dict(),
        "master_seed": config.seed,
        "label_scheme": label_scheme(ctx.policy),
        "streams": ctx.labels(),
        "versions": package_versions(),
        "threads": threads,
        "wall_seconds": wall_seconds,
        "replicas": ctx.total,
        "aborted": ctx.aborted,
        "aborts": ctx.abort_rows(),
        "exit_code": exit_code,
    })
    return path


def write_outputs(
    directory: Path,
    config: ExperimentConfig,
    result: EstimatorResult,
    ctx: RunContext,
    wall_seconds: float,
    threads: int,
    exit_code: int = 0,
) -> dict[str, Path]:
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "manifest": write_manifest(directory, config, ctx, wall_seconds, threads, exit_code),
        "report": write_report(directory, result),
        "replicas": write_csv(directory, result, ctx),
    }
    logger.info("wrote %s outputs to %s", result.subcommand, directory)
    return paths
