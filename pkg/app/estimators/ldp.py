"""Exponential tail fits for ρ_t and for the walker's deviation from its speed."""

from __future__ import annotations

import logging
import math
import warnings
from collections.abc import Sequence

import numpy as np

from ..config import EnvSpec
from ..errors import RhoMismatchWarning
from ..kernel import KernelSpec
from ..replicas import RunContext
from .common import EstimatorResult
from .reports import EstimateReport, TailFit, z_value
from .speed import SpeedParams, position_columns, speed_replica

logger = logging.getLogger(__name__)


def pilot_rho(
    kernel: KernelSpec,
    env: EnvSpec,
    t: float,
    ctx: RunContext,
    replicas: int | None = None,
) -> tuple[EstimateReport, EstimateReport]:
    """ρ̂ from 1̄ and from 0̄ at time t, on streams labelled "pilot"."""
    params = SpeedParams(kernel, env, (float(t),), ("ones", "zeros"))
    batch = ctx.map(speed_replica, params, tag="pilot", replicas=replicas)
    ones = batch.column("rho_t", initial="ones") / t
    zeros = batch.column("rho_t", initial="zeros") / t
    return (
        EstimateReport.from_samples(ones, ctx.confidence, "rho_t"),
        EstimateReport.from_samples(zeros, ctx.confidence, "rho_t"),
    )


def _centres(
    kernel: KernelSpec,
    env: EnvSpec,
    t: float,
    ctx: RunContext,
    rho_hat: float | Sequence[float] | None,
    pilot_replicas: int | None,
) -> tuple[float, float, dict]:
    if rho_hat is None:
        ones, zeros = pilot_rho(kernel, env, t, ctx, pilot_replicas)
        return ones.estimate, zeros.estimate, {"source": "pilot", "ones": ones.to_dict(), "zeros": zeros.to_dict()}
    if isinstance(rho_hat, (int, float)):
        return float(rho_hat), float(rho_hat), {"source": "option", "ones": float(rho_hat), "zeros": float(rho_hat)}
    upper, lower = (float(v) for v in rho_hat)
    return upper, lower, {"source": "option", "ones": upper, "zeros": lower}


def ldp_tail_rho(
    kernel: KernelSpec,
    env: EnvSpec,
    epsilons: Sequence[float],
    grid: Sequence[float],
    ctx: RunContext,
    rho_hat: float | Sequence[float] | None = None,
    pilot_replicas: int | None = None,
) -> EstimatorResult:
    """P(ρ_t > t(ρ̂_1 + ε)) from 1̄ and P(ρ_t < t(ρ̂_0 - ε)) from 0̄, fitted on a log scale."""
    grid = tuple(sorted(float(t) for t in grid))
    rho1, rho0, centre = _centres(kernel, env, grid[-1], ctx, rho_hat, pilot_replicas)
    batch = ctx.map(speed_replica, SpeedParams(kernel, env, grid, ("ones", "zeros")))
    fits = []
    inconclusive = []
    for eps in epsilons:
        up_hits, up_totals, low_hits, low_totals = [], [], [], []
        for t in grid:
            ones = batch.column("rho_t", initial="ones", t=t)
            zeros = batch.column("rho_t", initial="zeros", t=t)
            up_hits.append(int(np.count_nonzero(ones > t * (rho1 + eps))))
            up_totals.append(int(ones.size))
            low_hits.append(int(np.count_nonzero(zeros < t * (rho0 - eps))))
            low_totals.append(int(zeros.size))
        upper = TailFit.from_counts(grid, up_hits, up_totals, ctx.confidence, label=f"upper eps={eps}")
        lower = TailFit.from_counts(grid, low_hits, low_totals, ctx.confidence, label=f"lower eps={eps}")
        for fit in (upper, lower):
            if fit.inconclusive:
                inconclusive.append(fit.label)
        fits.append({"epsilon": eps, "upper": upper.to_dict(), "lower": lower.to_dict()})
    report = {
        "centre": centre,
        "fits": fits,
        "replicas": batch.replicas,
        "aborted": len(batch.aborted),
        "streams": [label for b in ctx.batches for label in b.labels()],
    }
    columns = ["replica", "initial", "t", "jumps", "rho_count", "rho_t", *position_columns(kernel.dimension), "below_ones"]
    return EstimatorResult("ldp-rho", report, columns, batch.rows, inconclusive=inconclusive)


def ldp_tail_walker(
    kernel: KernelSpec,
    env: EnvSpec,
    epsilons: Sequence[float],
    grid: Sequence[float],
    ctx: RunContext,
    initials: Sequence[str] = ("ones", "zeros", "bernoulli"),
    rho_hat: float | None = None,
    pilot_replicas: int | None = None,
) -> EstimatorResult:
    """P(‖W_t - t·v̂‖_1 > εt) per initial law, with v̂ = ρ̂_1 u_1 + (1 - ρ̂_1) u_0."""
    grid = tuple(sorted(float(t) for t in grid))
    flags = []
    if rho_hat is None:
        ones, zeros = pilot_rho(kernel, env, grid[-1], ctx, pilot_replicas)
        rho = ones.estimate
        gap = abs(ones.estimate - zeros.estimate)
        mismatch = gap > z_value(ctx.confidence) * math.hypot(ones.stderr, zeros.stderr)
        check = {"source": "pilot", "ones": ones.to_dict(), "zeros": zeros.to_dict(), "mismatch": mismatch}
        if mismatch:
            warnings.warn(
                f"ρ̂ from 1̄ ({ones.estimate:.4f}) and from 0̄ ({zeros.estimate:.4f}) differ beyond their joint CI",
                RhoMismatchWarning,
                stacklevel=2,
            )
            flags.append("rho-mismatch")
    else:
        rho = float(rho_hat)
        check = {"source": "option", "ones": rho, "zeros": None, "mismatch": None}
    speed = rho * kernel.drift1 + (1.0 - rho) * kernel.drift0
    columns = position_columns(kernel.dimension)
    batch = ctx.map(speed_replica, SpeedParams(kernel, env, grid, tuple(initials)))
    fits = []
    inconclusive = []
    for law in initials:
        for eps in epsilons:
            hits, totals = [], []
            for t in grid:
                rows = [r for r in batch.rows if r["initial"] == law and r["t"] == t]
                w = np.array([[r[c] for c in columns] for r in rows], dtype=np.float64).reshape(-1, kernel.dimension)
                deviation = np.abs(w - t * speed).sum(axis=1)
                hits.append(int(np.count_nonzero(deviation > eps * t)))
                totals.append(len(rows))
            fit = TailFit.from_counts(grid, hits, totals, ctx.confidence, label=f"{law} eps={eps}")
            if fit.inconclusive:
                inconclusive.append(fit.label)
            fits.append({"initial": law, "epsilon": eps, "fit": fit.to_dict()})
    report = {
        "rho_check": check,
        "speed": speed.tolist(),
        "fits": fits,
        "replicas": batch.replicas,
        "aborted": len(batch.aborted),
        "streams": [label for b in ctx.batches for label in b.labels()],
    }
    all_columns = ["replica", "initial", "t", "jumps", "rho_count", "rho_t", *columns, "below_ones"]
    return EstimatorResult("ldp-walk", report, all_columns, batch.rows, inconclusive=inconclusive, flags=flags)
