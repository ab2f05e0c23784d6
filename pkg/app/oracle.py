"""
Brute-force reference implementations for small diagrams.

Connectivity is decided by explicit depth-first path search over the event
list instead of a sweep, so these functions share no logic with `sweep.py`.
They are quadratic in the event count and meant for boxes with a handful of
sites and at most a few dozen events.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable

import numpy as np

from .graphical import (
    ARROW,
    CROSS,
    Box,
    Configuration,
    ContactEnvironment,
    GraphicalRep,
    SlabSpec,
    coupled_ordered,
    dual_evolve,
    evolve,
    rightmost,
    truncated_evolve,
)
from .kernel import KernelSpec, build_kernel
from .rng import RngPolicy, derive_stream
from .walker import WalkDriver, rho_ordered, run_walk


def reachable(rep: GraphicalRep, site: int, s: float, t: float, slab: SlabSpec | None = None) -> set[int]:
    """Sites y with a path from (site, s) to (y, t): up in time, no crosses, along arrows."""
    events = rep.events()
    coord0 = rep.box.coord0
    found: set[int] = set()
    seen: set[tuple[int, float]] = set()
    stack = [(site, s)]
    while stack:
        x, start = stack.pop()
        if (x, start) in seen:
            continue
        seen.add((x, start))
        death = min(
            (tau for tau, kind, a, _ in events if kind == CROSS and a == x and start < tau <= t),
            default=math.inf,
        )
        if death == math.inf:
            found.add(x)
        for tau, kind, a, b in events:
            if kind != ARROW or a != x or not start < tau < death or tau > t:
                continue
            if slab is not None and not (slab.contains(coord0[a], tau) and slab.contains(coord0[b], tau)):
                continue
            stack.append((b, tau))
    return found


def oracle_evolve(rep: GraphicalRep, initial: Configuration, t0: float, t1: float) -> Configuration:
    occupied = np.zeros(rep.box.n_sites, dtype=np.bool_)
    for x in np.flatnonzero(initial.occupied):
        occupied[list(reachable(rep, int(x), t0, t1))] = True
    return Configuration(rep.box, occupied)


def oracle_dual(rep: GraphicalRep, targets: Configuration, t: float, s: float) -> Configuration:
    occupied = np.zeros(rep.box.n_sites, dtype=np.bool_)
    goal = set(np.flatnonzero(targets.occupied).tolist())
    for x in range(rep.box.n_sites):
        occupied[x] = bool(reachable(rep, x, t - s, t) & goal)
    return Configuration(rep.box, occupied)


def oracle_rightmost(rep: GraphicalRep, initial: Configuration, z: int, s: float, t: float) -> int | None:
    at_s = oracle_evolve(rep, initial, 0.0, s)
    reached: set[int] = set()
    for x in np.flatnonzero(at_s.occupied):
        if rep.box.coord0[x] <= z:
            reached |= reachable(rep, int(x), s, t)
    return max((int(rep.box.coord0[y]) for y in reached), default=None)


def oracle_truncated(rep: GraphicalRep, slab: SlabSpec, initial: Configuration, t1: float) -> Configuration:
    occupied = np.zeros(rep.box.n_sites, dtype=np.bool_)
    start = initial.occupied & slab.section(rep.box, 0.0)
    for x in np.flatnonzero(start):
        occupied[list(reachable(rep, int(x), 0.0, t1, slab=slab))] = True
    return Configuration(rep.box, occupied & slab.section(rep.box, t1))


def random_instance(
    stream: np.random.Generator,
    dimension: int,
    radius: int,
    horizon: float,
    max_events: int = 12,
    boundary: str = "truncate",
) -> GraphicalRep:
    """A random diagram with at most `max_events` events, for oracle comparisons."""
    box = Box(dimension, radius, boundary)
    edge_src, edge_dst = box.edges
    n_events = int(stream.integers(0, max_events + 1))
    times = horizon * (1.0 - stream.random(n_events))
    crosses, arrows = [], []
    for t in times:
        if stream.random() < 0.4:
            crosses.append((box.coord(int(stream.integers(box.n_sites))), float(t)))
        else:
            e = int(stream.integers(edge_src.size))
            arrows.append((box.coord(int(edge_src[e])), box.coord(int(edge_dst[e])), float(t)))
    return GraphicalRep.from_events(box, 1.0, horizon, crosses, arrows, seed_label="oracle")


def random_configuration(stream: np.random.Generator, box: Box, density: float = 0.5) -> Configuration:
    return Configuration(box, stream.random(box.n_sites) < density)


def check_evolve(rep: GraphicalRep, initial: Configuration, t0: float, t1: float) -> bool:
    return evolve(rep, initial, t0, t1) == oracle_evolve(rep, initial, t0, t1)


def check_dual(rep: GraphicalRep, targets: Configuration, t: float, s: float) -> bool:
    return dual_evolve(rep, targets, t, s) == oracle_dual(rep, targets, t, s)


def check_rightmost(rep: GraphicalRep, initial: Configuration, z: int, s: float, t: float) -> bool:
    return rightmost(rep, initial, z, s, t) == oracle_rightmost(rep, initial, z, s, t)


def check_truncated(rep: GraphicalRep, slab: SlabSpec, initial: Configuration, t1: float) -> bool:
    return truncated_evolve(rep, slab, initial, t1) == oracle_truncated(rep, slab, initial, t1)


def ordered_pairs(box: Box) -> Iterable[tuple[Configuration, Configuration]]:
    """Every pair η <= ω of configurations on a small box (3^n pairs)."""
    for labels in itertools.product((0, 1, 2), repeat=box.n_sites):
        codes = np.array(labels)
        yield Configuration(box, codes == 2), Configuration(box, codes >= 1)


def check_walk_monotone(
    kernel: KernelSpec,
    rep: GraphicalRep,
    driver: WalkDriver,
    safe_radius: int | None = None,
) -> tuple[int, int]:
    """Monotonicity of ρ over all ordered initial pairs on the rep's box; returns (passed, total)."""
    passed = total = 0
    for lower, upper in ordered_pairs(rep.box):
        low = run_walk(kernel, ContactEnvironment(rep, lower, safe_radius=safe_radius), driver)
        high = run_walk(kernel, ContactEnvironment(rep, upper, safe_radius=safe_radius), driver)
        total += 1
        passed += rho_ordered(low, high)
    return passed, total


ORACLE_KERNEL = {(1, (1,)): 2.0, (1, (-1,)): 1.0, (0, (-1,)): 2.0, (0, (1,)): 1.0}
SUITES = ("evolve", "dual", "duality", "rightmost", "truncated", "attractiveness", "walker-monotone")


def random_driver(stream: np.random.Generator, gamma: float, horizon: float, max_jumps: int = 2) -> WalkDriver:
    """A driver with at most `max_jumps` jumps, so a walk from o stays within max_jumps of it."""
    n = int(stream.integers(0, max_jumps + 1))
    times = np.sort(horizon * (1.0 - stream.random(n)))
    return WalkDriver(gamma, horizon, times, stream.random(n), stream.random(n))


def _duality_holds(rep: GraphicalRep, a: Configuration, b: Configuration, t: float) -> bool:
    forward = evolve(rep, a, 0.0, t)
    backward = dual_evolve(rep, b, t, t)
    return bool((forward.occupied & b.occupied).any()) == bool((a.occupied & backward.occupied).any())


def run_oracle_suites(
    policy: RngPolicy,
    instances: int = 200,
    kernel: KernelSpec | None = None,
    suites: Iterable[str] = SUITES,
) -> dict[str, tuple[int, int]]:
    """Compare the sweeps with path search on random small diagrams; returns suite -> (passed, total)."""
    kernel = kernel or build_kernel(ORACLE_KERNEL, 1)
    results: dict[str, tuple[int, int]] = {}
    for suite in suites:
        if suite not in SUITES:
            raise ValueError(f"unknown oracle suite {suite!r}")
        stream = derive_stream(policy, (policy.experiment, "oracle", suite))
        passed = total = 0
        if suite == "walker-monotone":
            for _ in range(max(1, instances // 20)):
                horizon = 1.0
                rep = random_instance(stream, 1, 2, horizon)
                driver = random_driver(stream, kernel.gamma, horizon)
                ok, count = check_walk_monotone(kernel, rep, driver, safe_radius=2)
                passed += ok
                total += count
            results[suite] = (passed, total)
            continue
        for _ in range(instances):
            dimension = 1 if suite in ("rightmost", "truncated") else int(stream.integers(1, 3))
            radius = 2 if dimension == 1 else 1
            horizon = 2.0
            rep = random_instance(stream, dimension, radius, horizon)
            initial = random_configuration(stream, rep.box)
            t1 = float(horizon * stream.random())
            if suite == "evolve":
                t0 = float(t1 * stream.random())
                ok = check_evolve(rep, initial, t0, t1)
            elif suite == "dual":
                ok = check_dual(rep, initial, horizon, t1)
            elif suite == "duality":
                ok = _duality_holds(rep, initial, random_configuration(stream, rep.box), t1)
            elif suite == "rightmost":
                s = float(t1 * stream.random())
                z = int(stream.integers(-radius, radius + 1))
                ok = check_rightmost(rep, initial, z, s, t1)
            elif suite == "truncated":
                slab = SlabSpec(1, float(stream.choice([0.0, 0.5])))
                ok = check_truncated(rep, slab, initial, t1)
            else:
                upper = Configuration(rep.box, initial.occupied | (stream.random(rep.box.n_sites) < 0.5))
                ok = coupled_ordered(rep, initial, upper, 0.0, t1) and evolve(rep, initial, 0.0, t1) <= evolve(
                    rep, upper, 0.0, t1
                )
            passed += bool(ok)
            total += 1
        results[suite] = (passed, total)
    return results

