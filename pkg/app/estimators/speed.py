"""
Law-of-large-numbers estimators: walker speed, occupation density ρ̂ and
the ρ̂(λ) curve under the arrow-thinning coupling.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..config import EnvSpec
from ..kernel import KernelSpec
from ..replicas import RunContext
from ..rng import ReplicaStreams
from ..walker import WalkResult, rho_ordered, run_walk, run_walk_single_u
from .common import EstimatorResult, initial_configuration, walk_setup
from .reports import EstimateReport, paired_difference

logger = logging.getLogger(__name__)


def _walk_row(index: int, result: WalkResult, t: float, dimension: int) -> dict:
    w = result.position_at(t)
    row = {
        "replica": index,
        "t": t,
        "jumps": result.count_until(t),
        "rho_count": result.rho_count_at(t),
        "rho_t": result.rho_at(t),
    }
    row.update({f"w{j + 1}": int(w[j]) for j in range(dimension)})
    return row


def position_columns(dimension: int) -> list[str]:
    return [f"w{j + 1}" for j in range(dimension)]


@dataclass(frozen=True)
class SpeedParams:
    kernel: KernelSpec
    env: EnvSpec
    grid: tuple[float, ...]
    initials: tuple[str, ...]
    single_u: bool = False


def speed_replica(params: SpeedParams, streams: ReplicaStreams) -> list[dict]:
    """All initial laws walk on the same rep with the same driver."""
    kernel = params.kernel
    setup = walk_setup(kernel, params.env, max(params.grid), streams, single_u=params.single_u)
    walk = run_walk_single_u if params.single_u else run_walk
    results: dict[str, WalkResult] = {}
    rows = []
    for law in params.initials:
        initial = initial_configuration(params.env, law, setup.box, streams)
        result = walk(kernel, setup.environment(initial), setup.driver)
        results[law] = result
        below = "" if "ones" not in results or law == "ones" else int(rho_ordered(result, results["ones"]))
        for t in params.grid:
            row = _walk_row(streams.index, result, t, kernel.dimension)
            row["initial"] = law
            row["below_ones"] = below
            rows.append(row)
    return rows


def _law_reports(kernel: KernelSpec, rows: list[dict], t: float, confidence: float) -> dict:
    d = kernel.dimension
    rho_t = np.array([r["rho_t"] for r in rows], dtype=np.float64)
    jumps = np.array([r["jumps"] for r in rows], dtype=np.float64)
    w = np.array([[r[c] for c in position_columns(d)] for r in rows], dtype=np.float64).reshape(-1, d)
    rho = EstimateReport.from_samples(rho_t / t, confidence, data="rho_t")
    fraction = EstimateReport.from_samples(
        np.divide(rho_t * kernel.gamma, jumps, out=np.zeros_like(jumps), where=jumps > 0), confidence, data="rho_count"
    )
    speeds = [EstimateReport.from_samples(w[:, j] / t, confidence, data=f"w{j + 1}") for j in range(d)]
    # W_t minus its conditional mean given the counts is a martingale in t.
    expected = (np.outer(rho_t, kernel.drift1) + np.outer(jumps / kernel.gamma - rho_t, kernel.drift0)) / t
    residuals = [EstimateReport.from_samples(w[:, j] / t - expected[:, j], confidence) for j in range(d)]
    predicted = rho.estimate * kernel.drift1 + (1.0 - rho.estimate) * kernel.drift0
    return {
        "t": t,
        "rho": rho.to_dict(),
        "rho_fraction": fraction.to_dict(),
        "speed": [s.to_dict() for s in speeds],
        "predicted_speed": predicted.tolist(),
        "consistency_residual": [r.to_dict() for r in residuals],
        "consistent": all(not r.excludes(0.0) for r in residuals),
    }


def estimate_speed(
    kernel: KernelSpec,
    env: EnvSpec,
    grid: Sequence[float],
    ctx: RunContext,
    initials: Sequence[str] = ("ones",),
    single_u: bool = False,
    tag: str | None = None,
) -> EstimatorResult:
    """v̂(t) and ρ̂(t) per initial law and grid point, with the v = ρu_1 + (1-ρ)u_0 check."""
    grid = tuple(sorted(float(t) for t in grid))
    params = SpeedParams(kernel, env, grid, tuple(initials), single_u)
    batch = ctx.map(speed_replica, params, tag=tag)
    rows = batch.rows
    report: dict = {"initials": {}, "drift0": kernel.drift0.tolist(), "drift1": kernel.drift1.tolist()}
    flags = []
    for law in initials:
        per_t = [
            _law_reports(kernel, [r for r in rows if r["initial"] == law and r["t"] == t], t, ctx.confidence)
            for t in grid
        ]
        entry = {"grid": per_t}
        estimates = [p["rho"]["estimate"] for p in per_t]
        entry["rho_decreasing"] = all(b <= a for a, b in zip(estimates, estimates[1:]))
        if len(grid) >= 2:
            a = np.array([r["rho_t"] / grid[-2] for r in rows if r["initial"] == law and r["t"] == grid[-2]])
            b = np.array([r["rho_t"] / grid[-1] for r in rows if r["initial"] == law and r["t"] == grid[-1]])
            entry["stability"] = paired_difference(b, a, ctx.confidence)
        below = [r["below_ones"] for r in rows if r["initial"] == law and r["t"] == grid[-1] and r["below_ones"] != ""]
        entry["pathwise_below_ones"] = {"checked": len(below), "violations": len(below) - int(sum(below))}
        if not all(p["consistent"] for p in per_t):
            flags.append(f"speed-consistency:{law}")
        report["initials"][law] = entry
    if "ones" in initials and "zeros" in initials:
        top = report["initials"]["ones"]["grid"][-1]["rho"]
        bottom = report["initials"]["zeros"]["grid"][-1]["rho"]
        report["rho_ones_vs_zeros"] = {"ones": top["estimate"], "zeros": bottom["estimate"]}
    report["replicas"] = batch.replicas
    report["aborted"] = len(batch.aborted)
    report["streams"] = batch.labels()
    columns = ["replica", "initial", "t", "jumps", "rho_count", "rho_t", *position_columns(kernel.dimension), "below_ones"]
    return EstimatorResult("speed", report, columns, rows, flags=flags)


@dataclass(frozen=True)
class CurveParams:
    kernel: KernelSpec
    env: EnvSpec
    lams: tuple[float, ...]
    grid: tuple[float, ...]


def curve_replica(params: CurveParams, streams: ReplicaStreams) -> list[dict]:
    """One rep at the largest λ, thinned down the grid; same initial and driver throughout."""
    kernel = params.kernel
    top = params.lams[-1]
    setup = walk_setup(kernel, params.env, max(params.grid), streams, lam=top)
    initial = initial_configuration(params.env, params.env.initial, setup.box, streams, lam=top)
    rows = []
    previous = None
    for lam in params.lams:
        result = run_walk(kernel, setup.environment(initial, setup.rep.thinned(lam)), setup.driver)
        monotone = "" if previous is None else int(rho_ordered(previous, result))
        for t in params.grid:
            row = _walk_row(streams.index, result, t, kernel.dimension)
            row["lambda"] = lam
            row["monotone"] = monotone
            rows.append(row)
        previous = result
    return rows


def rho_curve(
    kernel: KernelSpec,
    env: EnvSpec,
    lams: Sequence[float],
    grid: Sequence[float],
    ctx: RunContext,
) -> EstimatorResult:
    """ρ̂(λ) along an ascending λ grid, with pathwise monotonicity counted per replica."""
    lams = tuple(float(v) for v in lams)
    if list(lams) != sorted(lams):
        raise ValueError("λ grid must be sorted ascending")
    grid = tuple(sorted(float(t) for t in grid))
    t = grid[-1]
    batch = ctx.map(curve_replica, CurveParams(kernel, env, lams, grid))
    rows = batch.rows
    curve = []
    samples = []
    for lam in lams:
        at = [r for r in rows if r["lambda"] == lam and r["t"] == t]
        values = np.array([r["rho_t"] / t for r in at])
        samples.append(values)
        estimate = EstimateReport.from_samples(values, ctx.confidence, data="rho_t")
        checks = [r["monotone"] for r in at if r["monotone"] != ""]
        curve.append({
            "lambda": lam,
            "rho": estimate.to_dict(),
            "excludes_0": estimate.excludes(0.0),
            "excludes_1": estimate.excludes(1.0),
            "pathwise_checked": len(checks),
            "pathwise_violations": len(checks) - int(sum(checks)),
        })
    steps = [paired_difference(b, a, ctx.confidence) for a, b in zip(samples, samples[1:])]
    nondecreasing = all(
        s["difference"]["estimate"] >= -3.0 * s["difference"]["stderr"] for s in steps
    )
    violations = sum(c["pathwise_violations"] for c in curve)
    report = {
        "t": t,
        "curve": curve,
        "steps": steps,
        "nondecreasing": nondecreasing,
        "pathwise_violations": violations,
        "replicas": batch.replicas,
        "aborted": len(batch.aborted),
        "streams": batch.labels(),
    }
    flags = [] if violations == 0 else ["thinning-monotonicity"]
    columns = ["replica", "lambda", "t", "jumps", "rho_count", "rho_t", *position_columns(kernel.dimension), "monotone"]
    return EstimatorResult("rho-curve", report, columns, rows, flags=flags)
