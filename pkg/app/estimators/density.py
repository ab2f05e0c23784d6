"""
Lower bounds on the occupation density through the observer schemes.

The observed walk only reads ξ at renewal steps, and at every step its bit
is at most the bit the full walk would read, so k^{-1}ρ^{(obs)}(k) bounds
the density of the plain walk from below.  The renewal gaps τ_k carry the
finiteness argument; their mean and tail are reported here.
"""

from __future__ import annotations

import logging
import math
import warnings
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..config import EnvSpec
from ..errors import DimensionMismatch, DriftDirectionWarning
from ..kernel import KernelSpec
from ..observers import RightmostObserver, SlabField, SlabObserver
from ..replicas import RunContext
from ..rng import ReplicaStreams
from ..walker import WalkResult, rho_ordered, run_walk, run_walk_general
from .common import EstimatorResult, initial_configuration, walk_setup
from .reports import EstimateReport, paired_difference

logger = logging.getLogger(__name__)

OBSERVERS = ("d1_rightmost", "slab")
TAU_LEVELS = (1, 2, 4, 8, 16, 32)


@dataclass(frozen=True)
class DensityParams:
    kernel: KernelSpec
    env: EnvSpec
    observer: str
    horizon: float
    initial: str
    K: int = 10
    L: float = 0.0
    mode: str = "independent"
    delta: float = 0.0
    beta: float = 0.5


def liminf_proxy(result: WalkResult) -> float:
    """min_{n/2 <= k <= n} ρ(k)/k over the steps of one path."""
    n = result.n_jumps
    if n == 0:
        return 0.0
    k = np.arange(max(1, math.ceil(n / 2)), n + 1)
    return float((result.rho[k] / k).min())


def _tau_columns(taus: Sequence[int]) -> dict:
    row = {"tau_count": len(taus)}
    for j in TAU_LEVELS:
        row[f"tau_gt_{j}"] = sum(1 for tau in taus if tau > j)
    return row


def _mean_or_blank(values: Sequence[int]) -> float | str:
    return float(np.mean(values)) if len(values) else ""


def density_replica(params: DensityParams, streams: ReplicaStreams) -> list[dict]:
    kernel, env = params.kernel, params.env
    setup = walk_setup(kernel, env, params.horizon, streams)
    initial = initial_configuration(env, params.initial, setup.box, streams)
    full = run_walk(kernel, setup.environment(initial), setup.driver)

    if params.observer == "d1_rightmost":
        observer = RightmostObserver()
    else:
        field = SlabField(
            params.K, params.L, params.mode,
            lam=env.lam, horizon=params.horizon, dimension=env.dimension,
            transverse_radius=env.transverse_radius,
            stream_factory=streams.factory("observer-aux"), max_events=env.max_events,
        )
        observer = SlabObserver(field, params.delta)
    observed = run_walk_general(kernel, setup.environment(initial), setup.driver, observer)

    n = observed.n_jumps
    half = observed.count_until(params.horizon / 2)
    taus = observer.taus
    half_taus = [tau for tau, T in zip(taus, observer.renewal_times) if T <= half]
    row = {
        "replica": streams.index,
        "steps": n,
        "rho_observed": int(observed.rho[-1]),
        "rho_full": int(full.rho[-1]),
        "density": observed.rho[-1] / n if n else "",
        "liminf": liminf_proxy(observed) if n else "",
        "renewals": len(taus),
        "tau_mean_half": _mean_or_blank(half_taus),
        "tau_mean": _mean_or_blank(taus),
        "tau_max": max(taus) if taus else "",
    }
    row.update(_tau_columns(taus))
    if params.observer == "d1_rightmost":
        front = observer.fronts[-1] if observer.fronts else None
        position = int(observed.positions[-1][0])
        row.update({
            "front": "" if front is None else front,
            "front_below": int(front is None or front <= params.beta * n),
            "position_above": int(position >= params.beta * n),
            "new_slab_fraction": "",
        })
        checked = True
    else:
        row.update({
            "front": "", "front_below": "", "position_above": "",
            "new_slab_fraction": observer.new_slab_fraction,
        })
        # Slab processes start from the full section: below ξ only when ξ starts from 1̄ on the same rep.
        checked = params.mode == "shared" and params.initial == "ones"
    row["below_full"] = int(rho_ordered(observed, full)) if checked else ""
    return [row]


def _columns() -> list[str]:
    columns = [
        "replica", "steps", "rho_observed", "rho_full", "density", "liminf", "renewals",
        "tau_mean_half", "tau_mean", "tau_max", "tau_count",
    ]
    columns += [f"tau_gt_{j}" for j in TAU_LEVELS]
    return columns + ["front", "front_below", "position_above", "new_slab_fraction", "below_full"]


def _numeric(rows: list[dict], key: str) -> np.ndarray:
    return np.array([r[key] for r in rows if r[key] != ""], dtype=np.float64)


def positive_density_lower_bound(
    kernel: KernelSpec,
    env: EnvSpec,
    observer: str,
    horizon: float,
    ctx: RunContext,
    K: int = 10,
    L: float = 0.0,
    mode: str = "independent",
    delta: float = 0.0,
    beta: float = 0.5,
    initial: str | None = None,
) -> EstimatorResult:
    """Estimate of liminf k^{-1}ρ^{(obs)}(k) with the τ statistics of the scheme."""
    if observer not in OBSERVERS:
        raise ValueError(f"unknown observer {observer!r}")
    flags = []
    if observer == "d1_rightmost":
        if env.dimension != 1:
            raise DimensionMismatch("the rightmost-particle observer needs d = 1")
        if kernel.drift0[0] > 0:
            warnings.warn(
                f"vacant drift {kernel.drift0[0]:+.3f} points right; the rightmost-particle scheme expects it left",
                DriftDirectionWarning,
                stacklevel=2,
            )
            flags.append("drift-direction")
        if initial is None:
            initial = env.initial if env.initial.endswith("_left") else "upper_invariant_left"
    else:
        if env.dimension < 2:
            raise DimensionMismatch("slab observers need d >= 2")
        if L > 0 and delta <= 0:
            logger.warning("tilted slabs without look-back: observations are not confined to one slab")
        initial = initial or env.initial
    params = DensityParams(kernel, env, observer, float(horizon), initial, int(K), float(L), mode, float(delta), float(beta))
    batch = ctx.map(density_replica, params)
    rows = batch.rows

    density = EstimateReport.from_samples(_numeric(rows, "density"), ctx.confidence, "density")
    liminf = EstimateReport.from_samples(_numeric(rows, "liminf"), ctx.confidence, "liminf")
    paired = [r for r in rows if r["tau_mean"] != "" and r["tau_mean_half"] != ""]
    tau_full = np.array([r["tau_mean"] for r in paired], dtype=np.float64)
    tau_half = np.array([r["tau_mean_half"] for r in paired], dtype=np.float64)
    total_taus = sum(r["tau_count"] for r in rows)
    tail = {
        str(j): EstimateReport.from_proportion(
            sum(r[f"tau_gt_{j}"] for r in rows), total_taus, ctx.confidence, "tau"
        ).to_dict()
        for j in TAU_LEVELS
    }
    checks = [r["below_full"] for r in rows if r["below_full"] != ""]
    violations = len(checks) - int(sum(checks))
    report = {
        "observer": observer,
        "initial": initial,
        "horizon": horizon,
        "density": density.to_dict(),
        "density_excludes_0": density.excludes(0.0),
        "liminf": liminf.to_dict(),
        "tau": {
            "mean": EstimateReport.from_samples(_numeric(rows, "tau_mean"), ctx.confidence, "tau_mean").to_dict(),
            "max": float(_numeric(rows, "tau_max").max(initial=0.0)),
            "tail": tail,
            "stability": paired_difference(tau_full, tau_half, ctx.confidence),
        },
        "pathwise_checked": len(checks),
        "pathwise_violations": violations,
        "replicas": batch.replicas,
        "aborted": len(batch.aborted),
        "streams": batch.labels(),
    }
    if observer == "d1_rightmost":
        report["beta_split"] = {
            "beta": beta,
            "front_below": EstimateReport.from_samples(_numeric(rows, "front_below"), ctx.confidence).to_dict(),
            "position_above": EstimateReport.from_samples(_numeric(rows, "position_above"), ctx.confidence).to_dict(),
        }
    else:
        report["slab"] = {"K": K, "L": L, "mode": mode, "delta": delta}
        report["new_slab_fraction"] = EstimateReport.from_samples(
            _numeric(rows, "new_slab_fraction"), ctx.confidence, "new_slab_fraction"
        ).to_dict()
    if violations:
        flags.append("observer-monotonicity")
    return EstimatorResult("density-lb", report, _columns(), rows, flags=flags)
