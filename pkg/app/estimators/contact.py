"""
Estimators on the contact process alone: coupling decay, the cone
functional, slab survival, the edge speed in d = 1, linear cluster growth
and a desk-scale bracket for the critical rate.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..config import EnvSpec
from ..errors import DimensionMismatch
from ..graphical import (
    Box,
    Configuration,
    SlabSpec,
    cone_discrepancy,
    evolve,
    rightmost_site,
    sample_bernoulli_config,
    sample_rep,
    truncated_evolve,
    window_discrepancy,
)
from ..replicas import RunContext
from ..rng import ReplicaStreams
from .common import EstimatorResult, environment_box, initial_configuration
from .reports import EstimateReport, TailFit, paired_difference

logger = logging.getLogger(__name__)

DEFAULT_SLAB_K = 10


def _origin(box: Box) -> tuple[int, ...]:
    return (0,) * box.dimension


def _streams_report(ctx: RunContext) -> list[str]:
    return [label for b in ctx.batches for label in b.labels()]


# -- coupling decay ---------------------------------------------------------


@dataclass(frozen=True)
class CouplingParams:
    env: EnvSpec
    grid: tuple[float, ...]
    density: float
    width: float = 1.0


def coupling_replica(params: CouplingParams, streams: ReplicaStreams) -> list[dict]:
    env = params.env
    horizon = max(params.grid) + params.width
    box = environment_box(env, horizon, 0)
    rep = sample_rep(box, env.lam, horizon, streams.get("rep"), max_events=env.max_events, seed_label="rep")
    lower = sample_bernoulli_config(box, params.density, streams.get("init"))
    hits, ordered = window_discrepancy(rep, lower, Configuration.full(box), _origin(box), params.grid, params.width)
    return [
        {"replica": streams.index, "T": T, "discrepancy": int(hit), "ordered": int(ordered)}
        for T, hit in zip(params.grid, hits)
    ]


def coupling_discrepancy(
    env: EnvSpec,
    density: float,
    grid: Sequence[float],
    ctx: RunContext,
) -> EstimatorResult:
    """P(the Bernoulli and the 1̄ start differ at o somewhere in [T, T + 1)), fitted in T."""
    grid = tuple(sorted(float(T) for T in grid))
    batch = ctx.map(coupling_replica, CouplingParams(env, grid, float(density)))
    hits = [int(batch.column("discrepancy", T=T).sum()) for T in grid]
    totals = [int(batch.column("discrepancy", T=T).size) for T in grid]
    fit = TailFit.from_counts(grid, hits, totals, ctx.confidence, label="coupling")
    unordered = int(np.count_nonzero(batch.column("ordered", T=grid[0]) == 0))
    report = {
        "density": density,
        "lambda": env.lam,
        "probabilities": [
            EstimateReport.from_proportion(k, n, ctx.confidence, "discrepancy").to_dict() for k, n in zip(hits, totals)
        ],
        "fit": fit.to_dict(),
        "order_violations": unordered,
        "replicas": batch.replicas,
        "aborted": len(batch.aborted),
        "streams": _streams_report(ctx),
    }
    flags = [] if unordered == 0 else ["attractiveness"]
    inconclusive = [fit.label] if fit.inconclusive else []
    return EstimatorResult("coupling", report, ["replica", "T", "discrepancy", "ordered"], batch.rows, inconclusive, flags)


# -- cone functional ---------------------------------------------------------


@dataclass(frozen=True)
class ConeParams:
    env: EnvSpec
    slopes: tuple[float, ...]
    grid: tuple[float, ...]
    initial: str
    reference: int
    tail: float
    step: float
    exact: bool

    @property
    def horizon(self) -> float:
        return max(self.grid) + self.tail


def cone_replica(params: ConeParams, streams: ReplicaStreams) -> list[dict]:
    env = params.env
    horizon = params.horizon
    window = int(math.ceil(max(params.slopes) * horizon)) + 1
    box = environment_box(env, horizon, window)
    rep = sample_rep(box, env.lam, horizon, streams.get("rep"), max_events=env.max_events, seed_label="rep")
    first = initial_configuration(env, params.initial, box, streams)
    second = Configuration.full(box) if params.reference else Configuration.empty(box)
    rows = []
    for m in params.slopes:
        latest = cone_discrepancy(rep, first, second, m, horizon, step=params.step, exact=params.exact)
        for T in params.grid:
            rows.append({
                "replica": streams.index, "m": m, "T": T, "latest": latest, "discrepancy": int(latest >= T),
            })
    return rows


def cone_mixing_phi(
    env: EnvSpec,
    slopes: Sequence[float],
    grid: Sequence[float],
    ctx: RunContext,
    initial: str = "zeros",
    reference: int = 1,
    tail: float = 1.0,
    step: float = 1.0,
    exact: bool = False,
) -> EstimatorResult:
    """φ̂(T): probability of a discrepancy with the constant start inside the cone after T.

    Times beyond max(T) + `tail` are not inspected and grid mode only looks
    at multiples of `step`, so both modes under-estimate.
    """
    grid = tuple(sorted(float(T) for T in grid))
    params = ConeParams(env, tuple(float(m) for m in slopes), grid, initial, int(reference), float(tail), float(step), exact)
    batch = ctx.map(cone_replica, params)
    curves = []
    for m in params.slopes:
        points = []
        for T in grid:
            values = batch.column("discrepancy", m=m, T=T)
            points.append(EstimateReport.from_proportion(int(values.sum()), int(values.size), ctx.confidence, "discrepancy"))
        estimates = [p.estimate for p in points]
        curves.append({
            "m": m,
            "phi": [p.to_dict() | {"T": T} for p, T in zip(points, grid)],
            "nonincreasing": all(b <= a for a, b in zip(estimates, estimates[1:])),
            "final": estimates[-1] if estimates else None,
        })
    report = {
        "initial": initial,
        "reference": reference,
        "mode": "exact" if exact else "grid",
        "step": step,
        "horizon": params.horizon,
        "curves": curves,
        "replicas": batch.replicas,
        "aborted": len(batch.aborted),
        "streams": _streams_report(ctx),
    }
    return EstimatorResult("conemix", report, ["replica", "m", "T", "latest", "discrepancy"], batch.rows)


# -- slab survival -----------------------------------------------------------


def slab_width_from_growth(a: float, l: float) -> int:
    """Half-width suggested by linear growth at rate a for a slab tilted by l/(l+1)."""
    return int(math.ceil(5 * a + 2 * a * l / (l + 1)))


@dataclass(frozen=True)
class SlabParams:
    env: EnvSpec
    Ks: tuple[int, ...]
    Ls: tuple[float, ...]
    lams: tuple[float, ...]
    t_end: float

    def box(self) -> Box:
        env = self.env
        radius = max(self.Ks) + int(math.ceil(max(abs(L) for L in self.Ls) * self.t_end)) + 1
        transverse = None
        if env.dimension >= 2:
            transverse = env.transverse_radius
            if transverse is None:
                transverse = max(1, int(math.ceil(env.pad * max(self.lams) * self.t_end)))
        box = Box(env.dimension, radius, "truncate", transverse_radius=transverse)
        box.check_budget()
        return box


def slab_replica(params: SlabParams, streams: ReplicaStreams) -> list[dict]:
    box = params.box()
    top = params.lams[-1]
    rep = sample_rep(box, top, params.t_end, streams.get("rep"), max_events=params.env.max_events, seed_label="rep")
    seed = Configuration.from_sites(box, [_origin(box)])
    rows = []
    previous: dict[tuple[int, float], int] = {}
    for lam in params.lams:
        thinned = rep.thinned(lam)
        for K in params.Ks:
            for L in params.Ls:
                alive = int(not truncated_evolve(thinned, SlabSpec(K, L), seed, params.t_end).is_empty())
                monotone = "" if (K, L) not in previous else int(previous[(K, L)] <= alive)
                previous[(K, L)] = alive
                rows.append({"replica": streams.index, "lambda": lam, "K": K, "L": L, "survived": alive, "monotone": monotone})
    return rows


def slab_survival(
    env: EnvSpec,
    Ks: Sequence[int],
    Ls: Sequence[float],
    lams: Sequence[float],
    t_end: float,
    ctx: RunContext,
) -> EstimatorResult:
    """Survival frequency of the slab-truncated process from {o} up to `t_end`.

    One rep per replica at the largest λ is thinned down the λ grid, so
    survival is monotone in λ on every replica.
    """
    params = SlabParams(env, tuple(int(K) for K in Ks), tuple(float(L) for L in Ls), tuple(sorted(lams)), float(t_end))
    batch = ctx.map(slab_replica, params)
    cells = []
    for lam in params.lams:
        for K in params.Ks:
            for L in params.Ls:
                values = batch.column("survived", **{"lambda": lam, "K": K, "L": L})
                estimate = EstimateReport.from_proportion(int(values.sum()), int(values.size), ctx.confidence, "survived")
                cells.append({"lambda": lam, "K": K, "L": L, "survival": estimate.to_dict(), "excludes_0": estimate.excludes(0.0)})
    checks = [r["monotone"] for r in batch.rows if r["monotone"] != ""]
    violations = len(checks) - int(sum(checks))
    report = {
        "t_end": t_end,
        "dimension": env.dimension,
        "box": params.box().describe(),
        "cells": cells,
        "pathwise_violations": violations,
        "replicas": batch.replicas,
        "aborted": len(batch.aborted),
        "streams": _streams_report(ctx),
    }
    flags = [] if violations == 0 else ["thinning-monotonicity"]
    return EstimatorResult("slab", report, ["replica", "lambda", "K", "L", "survived", "monotone"], batch.rows, flags=flags)


# -- edge speed --------------------------------------------------------------


@dataclass(frozen=True)
class EdgeParams:
    env: EnvSpec
    lams: tuple[float, ...]
    grid: tuple[float, ...]
    initial: str


def edge_replica(params: EdgeParams, streams: ReplicaStreams) -> list[dict]:
    env = params.env
    top = params.lams[-1]
    horizon = params.grid[-1]
    box = environment_box(env, horizon, 0, lam=top)
    rep = sample_rep(box, top, horizon, streams.get("rep"), max_events=env.max_events, seed_label="rep")
    initial = initial_configuration(env, params.initial, box, streams, lam=top)
    rows = []
    previous: dict[float, int | None] = {}
    for lam in params.lams:
        thinned = rep.thinned(lam)
        state, now = initial, 0.0
        for t in params.grid:
            state = evolve(thinned, state, now, t)
            now = t
            front = rightmost_site(state)
            lower = previous.get(t)
            monotone = "" if t not in previous else int(lower is None or (front is not None and lower <= front))
            previous[t] = front
            rows.append({
                "replica": streams.index, "lambda": lam, "t": t,
                "front": "" if front is None else front, "monotone": monotone,
            })
    return rows


def edge_speed(
    env: EnvSpec,
    lams: Sequence[float],
    grid: Sequence[float],
    ctx: RunContext,
    initial: str = "ones_left",
) -> EstimatorResult:
    """α̂(λ) = r_{0,t}(o) / t from a start occupying only x < 0 (d = 1)."""
    if env.dimension != 1:
        raise DimensionMismatch("the edge speed is defined for d = 1 only")
    if not initial.endswith("_left"):
        raise ValueError(f"edge speed needs a left-half-line start, got {initial!r}")
    params = EdgeParams(env, tuple(sorted(float(v) for v in lams)), tuple(sorted(float(t) for t in grid)), initial)
    batch = ctx.map(edge_replica, params)
    curve = []
    for lam in params.lams:
        points = []
        for t in params.grid:
            rows = [r for r in batch.rows if r["lambda"] == lam and r["t"] == t]
            fronts = np.array([r["front"] for r in rows if r["front"] != ""], dtype=np.float64)
            estimate = EstimateReport.from_samples(fronts / t, ctx.confidence, "front")
            points.append({
                "t": t, "speed": estimate.to_dict(), "excludes_0": estimate.excludes(0.0),
                "extinct": len(rows) - int(fronts.size),
            })
        entry = {"lambda": lam, "grid": points}
        if len(params.grid) >= 2:
            a_t, b_t = params.grid[-2], params.grid[-1]
            pairs = [
                (ra["front"] / a_t, rb["front"] / b_t)
                for ra, rb in zip(
                    (r for r in batch.rows if r["lambda"] == lam and r["t"] == a_t),
                    (r for r in batch.rows if r["lambda"] == lam and r["t"] == b_t),
                )
                if ra["front"] != "" and rb["front"] != ""
            ]
            first, second = (np.array(v) for v in zip(*pairs)) if pairs else (np.array([]), np.array([]))
            entry["stability"] = paired_difference(second, first, ctx.confidence)
        curve.append(entry)
    finals = [c["grid"][-1]["speed"]["estimate"] for c in curve]
    checks = [r["monotone"] for r in batch.rows if r["monotone"] != ""]
    violations = len(checks) - int(sum(checks))
    report = {
        "initial": initial,
        "curve": curve,
        "monotone_in_lambda": all(b >= a for a, b in zip(finals, finals[1:])),
        "pathwise_violations": violations,
        "replicas": batch.replicas,
        "aborted": len(batch.aborted),
        "streams": _streams_report(ctx),
    }
    flags = [] if violations == 0 else ["thinning-monotonicity"]
    return EstimatorResult("edge", report, ["replica", "lambda", "t", "front", "monotone"], batch.rows, flags=flags)


# -- cluster growth ----------------------------------------------------------


@dataclass(frozen=True)
class ClusterParams:
    env: EnvSpec
    grid: tuple[float, ...]


def cluster_replica(params: ClusterParams, streams: ReplicaStreams) -> list[dict]:
    env = params.env
    horizon = params.grid[-1]
    box = environment_box(env, horizon, 0)
    rep = sample_rep(box, env.lam, horizon, streams.get("rep"), max_events=env.max_events, seed_label="rep")
    state, now = Configuration.from_sites(box, [_origin(box)]), 0.0
    rows = []
    for t in params.grid:
        state = evolve(rep, state, now, t)
        now = t
        rows.append({"replica": streams.index, "t": t, "size": state.count})
    return rows


def cluster_growth(env: EnvSpec, a: float, grid: Sequence[float], ctx: RunContext) -> EstimatorResult:
    """P(|C_t(o, 0)| <= a·t | C_t(o, 0) != ∅), fitted on a log scale in t."""
    grid = tuple(sorted(float(t) for t in grid))
    batch = ctx.map(cluster_replica, ClusterParams(env, grid))
    hits, totals = [], []
    for t in grid:
        sizes = batch.column("size", t=t)
        alive = sizes > 0
        hits.append(int(np.count_nonzero(alive & (sizes <= a * t))))
        totals.append(int(np.count_nonzero(alive)))
    fit = TailFit.from_counts(grid, hits, totals, ctx.confidence, label="cluster")
    survival = [
        EstimateReport.from_proportion(n, int(batch.column("size", t=t).size), ctx.confidence, "size").to_dict()
        for n, t in zip(totals, grid)
    ]
    report = {
        "a": a,
        "lambda": env.lam,
        "survival": survival,
        "fit": fit.to_dict(),
        "replicas": batch.replicas,
        "aborted": len(batch.aborted),
        "streams": _streams_report(ctx),
    }
    inconclusive = [fit.label] if fit.inconclusive else []
    return EstimatorResult("cluster", report, ["replica", "t", "size"], batch.rows, inconclusive)


# -- critical rate bracket ---------------------------------------------------


@dataclass(frozen=True)
class CriticalParams:
    env: EnvSpec
    top: float
    lam: float
    t_end: float


def critical_replica(params: CriticalParams, streams: ReplicaStreams) -> list[dict]:
    env = params.env
    box = environment_box(env, params.t_end, 0, lam=params.top)
    # Same label on every bisection step: each replica thins one fixed rep.
    rep = sample_rep(box, params.top, params.t_end, streams.get("rep"), max_events=env.max_events, seed_label="rep")
    seed = Configuration.from_sites(box, [_origin(box)])
    alive = not evolve(rep.thinned(params.lam), seed, 0.0, params.t_end).is_empty()
    return [{"replica": streams.index, "lambda": params.lam, "survived": int(alive)}]


def bracket_critical_lambda(
    env: EnvSpec,
    lo: float,
    hi: float,
    t_end: float,
    ctx: RunContext,
    iterations: int = 8,
    threshold: float = 0.5,
) -> EstimatorResult:
    """Bisection on the survival frequency from {o}; a desk-scale bracket, not a value of λ_c."""
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got {lo}, {hi}")
    top = float(hi)
    steps = []
    rows = []
    for iteration in range(iterations):
        mid = 0.5 * (lo + hi)
        batch = ctx.map(critical_replica, CriticalParams(env, top, mid, float(t_end)), tag="bisect")
        values = batch.column("survived")
        estimate = EstimateReport.from_proportion(int(values.sum()), int(values.size), ctx.confidence, "survived")
        steps.append({"iteration": iteration, "lambda": mid, "survival": estimate.to_dict()})
        rows += [r | {"iteration": iteration} for r in batch.rows]
        if estimate.estimate >= threshold:
            hi = mid
        else:
            lo = mid
        logger.info("bisection step %d: lambda=%.4f survival=%.3f", iteration, mid, estimate.estimate)
    report = {
        "bracket": [lo, hi],
        "threshold": threshold,
        "t_end": t_end,
        "steps": steps,
        "replicas": ctx.replicas,
        "aborted": sum(len(b.aborted) for b in ctx.batches),
        "streams": sorted(set(_streams_report(ctx))),
    }
    return EstimatorResult("critical", report, ["iteration", "replica", "lambda", "survived"], rows)
