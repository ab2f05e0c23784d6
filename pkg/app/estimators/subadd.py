"""
The restarted-environment process behind the law of large numbers.

`count_0_t` is the number of occupied sites the walk from 1̄ has seen by
time t.  `count_t_ts` restarts at the walker's space-time point (W_t, t)
from 1̄ with the driver re-indexed past everything already consumed and
counts over the next s time units.  In shared mode the restart reads the
same rep, so count_0_ts <= count_0_t + count_t_ts on every replica; in
fresh mode it reads a new rep, which has the same law and is cheaper.
The counterparts from 0̄ are superadditive.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from ..config import EnvSpec
from ..graphical import Configuration, ContactEnvironment, sample_rep
from ..kernel import KernelSpec
from ..replicas import RunContext
from ..rng import ReplicaStreams
from ..walker import WalkResult, run_walk, sample_driver
from .common import EstimatorResult, walk_setup
from .reports import EstimateReport

logger = logging.getLogger(__name__)

KS_LEVEL = 0.01


@dataclass(frozen=True)
class SubaddParams:
    kernel: KernelSpec
    env: EnvSpec
    grid: tuple[float, ...]
    s: float
    k_max: int
    shared: bool

    @property
    def restart_horizon(self) -> float:
        return float(max(self.s, self.k_max, max(self.grid)))


def _restarted(
    params: SubaddParams,
    setup,
    result: WalkResult,
    t: float,
    full: bool,
    streams: ReplicaStreams,
    j: int,
) -> WalkResult:
    kernel = params.kernel
    horizon = params.restart_horizon
    box = setup.box
    initial = Configuration.full(box) if full else Configuration.empty(box)
    if params.shared:
        n = result.count_until(t)
        used = int(result.rho[n])
        driver = setup.driver.restart(n, used, n - used, t)
        driver = replace(driver, horizon=horizon, jump_times=driver.jump_times[driver.jump_times <= horizon])
        env = ContactEnvironment(setup.rep, initial, start_time=t, origin=result.position_at(t), safe_radius=setup.safe_radius)
    else:
        rep = sample_rep(
            box, params.env.lam, horizon, streams.get("rep-restart", j),
            max_events=params.env.max_events, seed_label=f"rep-restart-{j}",
        )
        driver = sample_driver(kernel.gamma, horizon, streams.driver_streams(restart=True, extra=(j,)))
        env = ContactEnvironment(rep, initial, safe_radius=setup.safe_radius)
    return run_walk(kernel, env, driver)


def subadd_replica(params: SubaddParams, streams: ReplicaStreams) -> list[dict]:
    kernel = params.kernel
    horizon = max(params.grid) + params.restart_horizon
    setup = walk_setup(kernel, params.env, horizon, streams)
    from_ones = run_walk(kernel, setup.environment(Configuration.full(setup.box)), setup.driver)
    from_zeros = run_walk(kernel, setup.environment(Configuration.empty(setup.box)), setup.driver)
    rows = []
    for j, t in enumerate(params.grid):
        s = params.s
        upper = _restarted(params, setup, from_ones, t, True, streams, j)
        lower = _restarted(params, setup, from_zeros, t, False, streams, j)
        row = {
            "replica": streams.index,
            "t": t,
            "s": s,
            "jumps_t": from_ones.count_until(t),
            "count_0_0": from_ones.rho_count_at(0.0),
            "count_0_t": from_ones.rho_count_at(t),
            "count_t_ts": upper.rho_count_at(s),
            "count_0_ts": from_ones.rho_count_at(t + s),
            "zeros_0_t": from_zeros.rho_count_at(t),
            "zeros_t_ts": lower.rho_count_at(s),
            "zeros_0_ts": from_zeros.rho_count_at(t + s),
            "count_t_2t": upper.rho_count_at(t),
        }
        for k in range(1, params.k_max + 1):
            row[f"count_0_{k}"] = from_ones.rho_count_at(float(k))
            row[f"count_t_{k}"] = upper.rho_count_at(float(k))
        rows.append(row)
    return rows


def subadditive_X(
    kernel: KernelSpec,
    env: EnvSpec,
    grid: Sequence[float],
    s: float,
    ctx: RunContext,
    k_max: int = 5,
    shared: bool = False,
) -> EstimatorResult:
    """Samples of the restarted counts per t with their pathwise and distributional checks."""
    grid = tuple(sorted(float(t) for t in grid))
    params = SubaddParams(kernel, env, grid, float(s), int(k_max), bool(shared))
    batch = ctx.map(subadd_replica, params)
    rows = batch.rows
    gamma = kernel.gamma
    per_t = []
    for t in grid:
        at = [r for r in rows if r["t"] == t]
        col = {key: np.array([r[key] for r in at], dtype=np.float64) for key in at[0]} if at else {}
        entry: dict = {"t": t, "s": s}
        if not col:
            per_t.append(entry)
            continue
        sub = col["count_0_ts"] > col["count_0_t"] + col["count_t_ts"]
        sup = col["zeros_0_ts"] < col["zeros_0_t"] + col["zeros_t_ts"]
        bounds = (col["count_0_t"] < 0) | (col["count_0_t"] > col["jumps_t"])
        entry.update({
            "rho_0_t": EstimateReport.from_samples(col["count_0_t"] / (gamma * t), ctx.confidence, "count_0_t").to_dict(),
            "rho_t_ts": EstimateReport.from_samples(col["count_t_ts"] / (gamma * s), ctx.confidence, "count_t_ts").to_dict(),
            "rho_0_ts": EstimateReport.from_samples(col["count_0_ts"] / (gamma * (t + s)), ctx.confidence, "count_0_ts").to_dict(),
            "subadditive_checked": bool(shared),
            "subadditive_violations": int(sub.sum()) if shared else None,
            "superadditive_violations": int(sup.sum()) if shared else None,
            "bound_violations": int(bounds.sum()),
            "start_nonzero": int(np.count_nonzero(col["count_0_0"])),
        })
        tests = []
        level = KS_LEVEL / k_max
        for k in range(1, k_max + 1):
            a, b = col[f"count_t_{k}"], col[f"count_0_{k}"]
            result = stats.ks_2samp(a, b)
            tests.append({
                "k": k,
                "statistic": float(result.statistic),
                "pvalue": float(result.pvalue),
                "passed": bool(result.pvalue >= level),
            })
        entry["stationarity"] = {"level": level, "tests": tests, "passed": all(x["passed"] for x in tests)}
        x, y = col["count_0_t"], col["count_t_2t"]
        if x.size > 2 and np.ptp(x) > 0 and np.ptp(y) > 0:
            corr = stats.pearsonr(x, y)
            entry["block_correlation"] = {"r": float(corr.statistic), "pvalue": float(corr.pvalue)}
        else:
            entry["block_correlation"] = {"r": None, "pvalue": None}
        per_t.append(entry)
    flags = []
    if shared and any(e.get("subadditive_violations") for e in per_t):
        flags.append("subadditivity")
    report = {
        "mode": "shared" if shared else "fresh",
        "grid": per_t,
        "replicas": batch.replicas,
        "aborted": len(batch.aborted),
        "streams": batch.labels(),
    }
    columns = [
        "replica", "t", "s", "jumps_t", "count_0_0", "count_0_t", "count_t_ts", "count_0_ts",
        "zeros_0_t", "zeros_t_ts", "zeros_0_ts", "count_t_2t",
    ]
    for k in range(1, k_max + 1):
        columns += [f"count_0_{k}", f"count_t_{k}"]
    return EstimatorResult("subadd", report, columns, rows, flags=flags)
