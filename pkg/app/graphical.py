"""
Graphical representation of the contact process on a finite box.

Crosses (deaths, rate 1 per site) and arrows (infections, rate λ per directed
nearest-neighbour edge) are sampled once per replica and stored as one
time-sorted event array.  Forward, dual, truncated and coupled evolutions all
read the same immutable `GraphicalRep`; the hot loops live in `sweep.py`.
"""

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import sweep
from .errors import DimensionMismatch, ResourceLimit, SimulationError, TimeOutOfRange, WalkerLeftSafeRegion

logger = logging.getLogger(__name__)

CROSS = sweep.CROSS
ARROW = sweep.ARROW

BOUNDARY_MODES = ("truncate", "periodic")

# Safety margin: R >= r + ceil(DEFAULT_PAD * λ * T).
DEFAULT_PAD = 4.0
DEFAULT_MAX_EVENTS = 50_000_000
DEFAULT_MAX_SITES = 10_000_000


@dataclass(frozen=True)
class Box:
    """Sites x with ‖x‖_∞ ≤ R.

    With `transverse_radius` set, coordinates 2..d range over
    [-transverse_radius, transverse_radius] instead (used for slabs).
    """

    dimension: int
    radius: int
    boundary: str = "truncate"
    transverse_radius: int | None = None

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise DimensionMismatch(f"box dimension must be positive, got {self.dimension}")
        if self.radius < 1:
            raise SimulationError(f"box radius must be at least 1, got {self.radius}")
        if self.boundary not in BOUNDARY_MODES:
            raise SimulationError(f"unknown boundary mode {self.boundary!r}")
        if self.transverse_radius is not None and self.transverse_radius < 0:
            raise SimulationError("transverse radius must be nonnegative")

    @property
    def shape(self) -> tuple[int, ...]:
        side = 2 * self.radius + 1
        transverse = side if self.transverse_radius is None else 2 * self.transverse_radius + 1
        return (side,) + (transverse,) * (self.dimension - 1)

    @property
    def offsets(self) -> np.ndarray:
        return (np.array(self.shape, dtype=np.int64) - 1) // 2

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.shape))

    def check_budget(self, max_sites: int = DEFAULT_MAX_SITES) -> None:
        if self.n_sites > max_sites:
            raise ResourceLimit(f"box has {self.n_sites} sites, budget is {max_sites}")

    @cached_property
    def coords(self) -> np.ndarray:
        grid = np.indices(self.shape, dtype=np.int64).reshape(self.dimension, -1).T
        return grid - self.offsets

    @cached_property
    def coord0(self) -> np.ndarray:
        return np.ascontiguousarray(self.coords[:, 0])

    @cached_property
    def norms1(self) -> np.ndarray:
        return np.abs(self.coords).sum(axis=1)

    @cached_property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Directed nearest-neighbour edges (src, dst) as flat site indices."""
        shape = np.array(self.shape)
        sources, targets = [], []
        for axis in range(self.dimension):
            for sign in (1, -1):
                shifted = self.coords + self.offsets
                shifted[:, axis] += sign
                if self.boundary == "periodic":
                    shifted[:, axis] %= shape[axis]
                    keep = shifted[:, axis] != (self.coords[:, axis] + self.offsets[axis])
                else:
                    keep = (shifted[:, axis] >= 0) & (shifted[:, axis] < shape[axis])
                sources.append(np.flatnonzero(keep))
                targets.append(np.ravel_multi_index(tuple(shifted[keep].T), self.shape))
        src = np.concatenate(sources).astype(np.int64)
        dst = np.concatenate(targets).astype(np.int64)
        # Periodic boxes of side 2 would list one edge twice.
        pairs = np.unique(np.stack([src, dst], axis=1), axis=0)
        return pairs[:, 0].copy(), pairs[:, 1].copy()

    def contains(self, coord: Sequence[int]) -> bool:
        c = np.asarray(coord, dtype=np.int64)
        return c.shape == (self.dimension,) and bool(np.all(np.abs(c) <= self.offsets))

    def index(self, coord: Sequence[int]) -> int:
        c = np.asarray(coord, dtype=np.int64)
        if c.shape != (self.dimension,):
            raise DimensionMismatch(f"site {tuple(c)} does not have dimension {self.dimension}")
        if not self.contains(c):
            raise SimulationError(f"site {tuple(int(v) for v in c)} outside the box")
        return int(np.ravel_multi_index(tuple(c + self.offsets), self.shape))

    def coord(self, index: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.coords[index])

    def describe(self) -> dict:
        return {
            "dimension": self.dimension,
            "radius": self.radius,
            "boundary": self.boundary,
            "transverse_radius": self.transverse_radius,
            "sites": self.n_sites,
        }


@dataclass(frozen=True, eq=False)
class Configuration:
    """Occupancy bit per box site; `occupied` is indexed by flat site index."""

    box: Box
    occupied: np.ndarray

    def __post_init__(self) -> None:
        if self.occupied.shape != (self.box.n_sites,):
            raise DimensionMismatch("configuration does not cover the box")

    @classmethod
    def full(cls, box: Box) -> Configuration:
        return cls(box, np.ones(box.n_sites, dtype=np.bool_))

    @classmethod
    def empty(cls, box: Box) -> Configuration:
        return cls(box, np.zeros(box.n_sites, dtype=np.bool_))

    @classmethod
    def from_sites(cls, box: Box, sites: Iterable[Sequence[int]]) -> Configuration:
        occupied = np.zeros(box.n_sites, dtype=np.bool_)
        for site in sites:
            occupied[box.index(site)] = True
        return cls(box, occupied)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.box == other.box and bool(np.array_equal(self.occupied, other.occupied))

    __hash__ = None  # type: ignore[assignment]

    def __le__(self, other: Configuration) -> bool:
        return bool(np.all(~self.occupied | other.occupied))

    def __getitem__(self, coord: Sequence[int]) -> int:
        return int(self.occupied[self.box.index(coord)])

    @property
    def count(self) -> int:
        return int(self.occupied.sum())

    def is_empty(self) -> bool:
        return not self.occupied.any()

    def sites(self) -> list[tuple[int, ...]]:
        return [self.box.coord(i) for i in np.flatnonzero(self.occupied)]

    def masked(self, mask: np.ndarray) -> Configuration:
        return Configuration(self.box, self.occupied & mask)

    def density(self) -> float:
        return float(self.occupied.mean())


@dataclass(frozen=True)
class SlabSpec:
    """Slab of half-width K moving at speed L in coordinate 1, shifted by `offset`."""

    K: int
    L: float = 0.0
    offset: float = 0.0

    def __post_init__(self) -> None:
        if self.K < 1:
            raise SimulationError(f"slab half-width must be at least 1, got {self.K}")

    def centre(self, t: float) -> float:
        return self.offset + self.L * t

    def contains(self, x1: float, t: float) -> bool:
        return abs(x1 - self.centre(t)) <= self.K

    def section(self, box: Box, t: float = 0.0) -> np.ndarray:
        return np.abs(box.coord0 - self.centre(t)) <= self.K

    def shifted(self, offset: float) -> SlabSpec:
        return SlabSpec(self.K, self.L, offset)


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class GraphicalRep:
    """Poisson event field on a box over [0, horizon].

    Events are stored merged and sorted by time.  For a cross `dst == src`.
    `marks` carries one uniform per arrow for nested thinning (0 for crosses).
    """

    box: Box
    lam: float
    horizon: float
    times: np.ndarray
    kinds: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    marks: np.ndarray
    seed_label: str = ""
    thinned_from: float | None = field(default=None)

    @classmethod
    def from_events(
        cls,
        box: Box,
        lam: float,
        horizon: float,
        crosses: Iterable[tuple[Sequence[int], float]] = (),
        arrows: Iterable[tuple[Sequence[int], Sequence[int], float]] = (),
        seed_label: str = "manual",
    ) -> GraphicalRep:
        """Hand-built diagram; arrows must join nearest neighbours of the box."""
        edge_set = set(zip(*(e.tolist() for e in box.edges)))
        times, kinds, src, dst = [], [], [], []
        for site, t in crosses:
            i = box.index(site)
            times.append(float(t))
            kinds.append(CROSS)
            src.append(i)
            dst.append(i)
        for a, b, t in arrows:
            i, j = box.index(a), box.index(b)
            if (i, j) not in edge_set:
                raise SimulationError(f"arrow {tuple(a)} -> {tuple(b)} is not a box edge")
            times.append(float(t))
            kinds.append(ARROW)
            src.append(i)
            dst.append(j)
        times_arr = np.array(times, dtype=np.float64)
        if times_arr.size and (times_arr.min() < 0 or times_arr.max() > horizon):
            raise TimeOutOfRange("event times must lie in [0, horizon]")
        order = np.argsort(times_arr, kind="stable")
        return cls(
            box=box,
            lam=lam,
            horizon=float(horizon),
            times=_readonly(times_arr[order]),
            kinds=_readonly(np.array(kinds, dtype=np.int8)[order]),
            src=_readonly(np.array(src, dtype=np.int64)[order]),
            dst=_readonly(np.array(dst, dtype=np.int64)[order]),
            marks=_readonly(np.zeros(len(times), dtype=np.float64)),
            seed_label=seed_label,
        )

    @classmethod
    def no_events(cls, box: Box, horizon: float = math.inf) -> GraphicalRep:
        return cls.from_events(box, 0.0, horizon, seed_label="frozen")

    @property
    def n_events(self) -> int:
        return int(self.times.size)

    @property
    def n_crosses(self) -> int:
        return int(np.count_nonzero(self.kinds == CROSS))

    @property
    def n_arrows(self) -> int:
        return int(np.count_nonzero(self.kinds == ARROW))

    def window(self, t0: float, t1: float) -> tuple[int, int]:
        """Index range of the events with time in (t0, t1]."""
        lo = int(np.searchsorted(self.times, t0, side="right"))
        hi = int(np.searchsorted(self.times, t1, side="right"))
        return lo, hi

    def crosses_at(self, site: Sequence[int]) -> np.ndarray:
        i = self.box.index(site)
        return self.times[(self.kinds == CROSS) & (self.src == i)]

    def arrows_on(self, site: Sequence[int], direction: Sequence[int]) -> np.ndarray:
        i = self.box.index(site)
        hit = (self.kinds == ARROW) & (self.src == i)
        directions = self._directions(self.src[hit], self.dst[hit])
        return self.times[hit][np.all(directions == np.asarray(direction), axis=1)]

    def _directions(self, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
        diff = self.box.coords[dst] - self.box.coords[src]
        wrapped = np.abs(diff) > 1
        diff[wrapped] = -np.sign(diff[wrapped])
        return diff

    def thinned(self, lam: float) -> GraphicalRep:
        """Keep every cross and each arrow with mark < lam / base rate (nested in lam)."""
        if lam > self.lam or lam <= 0:
            raise SimulationError(f"can only thin to 0 < λ' <= {self.lam}, got {lam}")
        if lam == self.lam:
            return self
        # Marks were drawn against the rate the arrows were sampled at.
        base = self.thinned_from or self.lam
        keep = (self.kinds == CROSS) | (self.marks < lam / base)
        return GraphicalRep(
            box=self.box,
            lam=lam,
            horizon=self.horizon,
            times=_readonly(self.times[keep]),
            kinds=_readonly(self.kinds[keep]),
            src=_readonly(self.src[keep]),
            dst=_readonly(self.dst[keep]),
            marks=_readonly(self.marks[keep]),
            seed_label=self.seed_label,
            thinned_from=base,
        )

    def translated(self, shift: Sequence[int]) -> GraphicalRep:
        """Event field moved by `shift`; exact only on a periodic box."""
        if self.box.boundary != "periodic":
            raise SimulationError("translation is only defined on a periodic box")
        mapping = shift_indices(self.box, shift)
        return GraphicalRep(
            box=self.box,
            lam=self.lam,
            horizon=self.horizon,
            times=self.times,
            kinds=self.kinds,
            src=_readonly(mapping[self.src]),
            dst=_readonly(mapping[self.dst]),
            marks=self.marks,
            seed_label=self.seed_label,
            thinned_from=self.thinned_from,
        )

    def events(self) -> list[tuple[float, int, int, int]]:
        return list(zip(self.times.tolist(), self.kinds.tolist(), self.src.tolist(), self.dst.tolist()))

    def metadata(self) -> dict:
        return {
            "seed_label": self.seed_label,
            "lambda": self.lam,
            "thinned_from": self.thinned_from,
            "box": self.box.describe(),
            "horizon": self.horizon if math.isfinite(self.horizon) else None,
            "crosses": self.n_crosses,
            "arrows": self.n_arrows,
        }

    def to_csv(self, path: str | Path) -> int:
        """Write the space-time event dump (kind, site, edge, time); returns the row count."""
        directions = self._directions(self.src, self.dst)
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["kind", "site", "edge", "time"])
            for e in range(self.n_events):
                site = " ".join(str(v) for v in self.box.coords[self.src[e]])
                if self.kinds[e] == CROSS:
                    writer.writerow(["cross", site, "", repr(float(self.times[e]))])
                else:
                    edge = " ".join(str(v) for v in directions[e])
                    writer.writerow(["arrow", site, edge, repr(float(self.times[e]))])
        return self.n_events


def shift_indices(box: Box, shift: Sequence[int]) -> np.ndarray:
    """Flat index map x -> x + shift on a periodic box."""
    moved = (box.coords + box.offsets + np.asarray(shift, dtype=np.int64)) % np.array(box.shape)
    return np.ravel_multi_index(tuple(moved.T), box.shape).astype(np.int64)


def safety_radius(window: int, lam: float, horizon: float, pad: float = DEFAULT_PAD) -> int:
    """Box radius R = r + ceil(pad·λ·T) for data read within radius r up to time T."""
    return int(window) + int(math.ceil(pad * lam * horizon))


def sample_rep(
    box: Box,
    lam: float,
    horizon: float,
    stream: np.random.Generator,
    max_events: int = DEFAULT_MAX_EVENTS,
    seed_label: str = "",
) -> GraphicalRep:
    """Sample crosses at rate 1 per site and arrows at rate λ per directed edge."""
    if lam <= 0:
        raise SimulationError(f"infection rate must be positive, got {lam}")
    if horizon <= 0:
        raise TimeOutOfRange(f"horizon must be positive, got {horizon}")
    box.check_budget()
    edge_src, edge_dst = box.edges
    expected = horizon * (box.n_sites + lam * edge_src.size)
    if expected > max_events:
        raise ResourceLimit(f"expected {expected:.3g} events, budget is {max_events}")

    cross_counts = stream.poisson(horizon, size=box.n_sites)
    arrow_counts = stream.poisson(lam * horizon, size=edge_src.size)
    cross_sites = np.repeat(np.arange(box.n_sites, dtype=np.int64), cross_counts)
    arrow_edges = np.repeat(np.arange(edge_src.size, dtype=np.int64), arrow_counts)
    n_cross, n_arrow = cross_sites.size, arrow_edges.size

    # horizon * (1 - U) lies in (0, horizon].
    times = horizon * (1.0 - stream.random(n_cross + n_arrow))
    marks = np.concatenate([np.zeros(n_cross), stream.random(n_arrow)])
    kinds = np.concatenate([np.full(n_cross, CROSS, np.int8), np.full(n_arrow, ARROW, np.int8)])
    src = np.concatenate([cross_sites, edge_src[arrow_edges]])
    dst = np.concatenate([cross_sites, edge_dst[arrow_edges]])

    order = np.argsort(times, kind="stable")
    logger.debug("sampled rep %s: %d crosses, %d arrows", seed_label, n_cross, n_arrow)
    return GraphicalRep(
        box=box,
        lam=float(lam),
        horizon=float(horizon),
        times=_readonly(times[order]),
        kinds=_readonly(kinds[order]),
        src=_readonly(src[order]),
        dst=_readonly(dst[order]),
        marks=_readonly(marks[order]),
        seed_label=seed_label,
    )


def _check_box(rep: GraphicalRep, config: Configuration) -> None:
    if config.box != rep.box:
        raise DimensionMismatch("configuration and graphical representation live on different boxes")


def _check_times(rep: GraphicalRep, t0: float, t1: float) -> None:
    if not 0.0 <= t0 <= t1 <= rep.horizon:
        raise TimeOutOfRange(f"need 0 <= {t0} <= {t1} <= horizon {rep.horizon}")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Piecewise-constant path of a configuration, stored as a change log."""

    initial: Configuration
    t0: float
    t1: float
    change_times: np.ndarray
    change_sites: np.ndarray
    change_values: np.ndarray

    @property
    def final(self) -> Configuration:
        return self.at(self.t1)

    def at(self, t: float) -> Configuration:
        if not self.t0 <= t <= self.t1:
            raise TimeOutOfRange(f"trajectory covers [{self.t0}, {self.t1}], asked for {t}")
        n = int(np.searchsorted(self.change_times, t, side="right"))
        occupied = self.initial.occupied.copy()
        # Replayed in order: later writes to the same site win.
        for i in range(n):
            occupied[self.change_sites[i]] = self.change_values[i]
        return Configuration(self.initial.box, occupied)


def evolve(
    rep: GraphicalRep,
    initial: Configuration,
    t0: float,
    t1: float,
    record: bool = False,
) -> Configuration | Trajectory:
    """Forward evolution from `initial` at t0 to t1 (events in (t0, t1])."""
    _check_box(rep, initial)
    _check_times(rep, t0, t1)
    lo, hi = rep.window(t0, t1)
    state = initial.occupied.copy()
    if not record:
        sweep.sweep_forward(rep.kinds, rep.src, rep.dst, state, lo, hi)
        return Configuration(rep.box, state)
    size = hi - lo
    out_times = np.empty(size, dtype=np.float64)
    out_sites = np.empty(size, dtype=np.int64)
    out_values = np.empty(size, dtype=np.bool_)
    n = sweep.sweep_record(rep.times, rep.kinds, rep.src, rep.dst, state, lo, hi, out_times, out_sites, out_values)
    return Trajectory(initial, t0, t1, out_times[:n], out_sites[:n], out_values[:n])


def coupled_evolve(
    rep: GraphicalRep,
    initials: Sequence[Configuration],
    t0: float,
    t1: float,
    record: bool = False,
) -> list:
    """Evolve every initial configuration on the same rep; order is preserved."""
    return [evolve(rep, initial, t0, t1, record=record) for initial in initials]


def coupled_ordered(rep: GraphicalRep, lower: Configuration, upper: Configuration, t0: float, t1: float) -> bool:
    """True iff the two coupled evolutions stay ordered at every event in (t0, t1]."""
    _check_box(rep, lower)
    _check_box(rep, upper)
    _check_times(rep, t0, t1)
    if not lower <= upper:
        return False
    lo, hi = rep.window(t0, t1)
    a, b = lower.occupied.copy(), upper.occupied.copy()
    return bool(sweep.sweep_pair_ordered(rep.kinds, rep.src, rep.dst, a, b, lo, hi))


def window_discrepancy(
    rep: GraphicalRep,
    lower: Configuration,
    upper: Configuration,
    site: Sequence[int],
    starts: Sequence[float],
    width: float = 1.0,
) -> tuple[np.ndarray, bool]:
    """Per window [T, T + width): do the two coupled evolutions from time 0 differ at `site`?

    Also returns whether lower <= upper held on every touched site.
    """
    _check_box(rep, lower)
    _check_box(rep, upper)
    starts = np.asarray(starts, dtype=np.float64)
    horizon = float(starts.max(initial=0.0)) + width
    _check_times(rep, 0.0, horizon)
    lo, hi = rep.window(0.0, horizon)
    hits, ordered = sweep.sweep_window_discrepancy(
        rep.times, rep.kinds, rep.src, rep.dst, lower.occupied.copy(), upper.occupied.copy(),
        rep.box.index(site), starts, float(width), lo, hi, horizon,
    )
    return hits, bool(ordered and lower <= upper)


def cone_discrepancy(
    rep: GraphicalRep,
    first: Configuration,
    second: Configuration,
    slope: float,
    horizon: float,
    step: float = 1.0,
    exact: bool = False,
) -> float:
    """Latest time t <= horizon with the two evolutions differing at some x, ‖x‖_1 < slope·t.

    Grid mode inspects t = 0, step, 2·step, ...; exact mode every inter-event
    interval.  Returns -1.0 if they never differ inside the cone.
    """
    _check_box(rep, first)
    _check_box(rep, second)
    _check_times(rep, 0.0, horizon)
    lo, hi = rep.window(0.0, horizon)
    return float(sweep.sweep_cone_discrepancy(
        rep.times, rep.kinds, rep.src, rep.dst, rep.box.norms1, first.occupied.copy(), second.occupied.copy(),
        float(slope), lo, hi, float(horizon), float(step), bool(exact),
    ))


def dual_evolve(rep: GraphicalRep, targets: Configuration, t: float, s: float) -> Configuration:
    """Backward process ξ̂_s^{B,t}: x occupied iff (x, t-s) connects to B at time t."""
    _check_box(rep, targets)
    if s < 0 or s > t:
        raise TimeOutOfRange(f"dual time s={s} must lie in [0, t={t}]")
    _check_times(rep, t - s, t)
    lo, hi = rep.window(t - s, t)
    state = targets.occupied.copy()
    sweep.sweep_backward(rep.kinds, rep.src, rep.dst, state, lo, hi)
    return Configuration(rep.box, state)


def truncated_evolve(
    rep: GraphicalRep,
    slab: SlabSpec,
    initial: Configuration,
    t1: float,
    t0: float = 0.0,
) -> Configuration:
    """Evolution using only arrows with both endpoints inside the slab; vacant outside it."""
    _check_box(rep, initial)
    _check_times(rep, t0, t1)
    lo, hi = rep.window(t0, t1)
    state = initial.occupied & slab.section(rep.box, t0)
    sweep.sweep_slab(
        rep.times, rep.kinds, rep.src, rep.dst, rep.box.coord0.astype(np.float64),
        state, lo, hi, float(slab.K), float(slab.L), float(slab.offset),
    )
    return Configuration(rep.box, state & slab.section(rep.box, t1))


def rightmost(rep: GraphicalRep, initial: Configuration, z: int, s: float, t: float) -> int | None:
    """r_{s,t}(z): rightmost site at t reached from sites x <= z occupied at s."""
    if rep.box.dimension != 1:
        raise DimensionMismatch("rightmost is defined for d = 1 only")
    if s > t:
        raise TimeOutOfRange(f"need s={s} <= t={t}")
    at_s = evolve(rep, initial, 0.0, s)
    sources = at_s.masked(rep.box.coord0 <= z)
    at_t = evolve(rep, sources, s, t)
    return rightmost_site(at_t)


def rightmost_site(config: Configuration) -> int | None:
    occupied = np.flatnonzero(config.occupied)
    if occupied.size == 0:
        return None
    return int(config.box.coord0[occupied].max())


def sample_bernoulli_config(box: Box, density: float, stream: np.random.Generator) -> Configuration:
    if not 0.0 <= density <= 1.0:
        raise SimulationError(f"density must lie in [0, 1], got {density}")
    return Configuration(box, stream.random(box.n_sites) < density)


def sample_upper_invariant(
    box: Box,
    lam: float,
    burn_in: float,
    stream: np.random.Generator,
    max_events: int = DEFAULT_MAX_EVENTS,
) -> Configuration:
    """Approximate sample of the upper invariant measure: 1̄ evolved for `burn_in`."""
    if burn_in <= 0:
        raise TimeOutOfRange(f"burn-in must be positive, got {burn_in}")
    rep = sample_rep(box, lam, burn_in, stream, max_events=max_events, seed_label="burn-in")
    return evolve(rep, Configuration.full(box), 0.0, burn_in)


class Tracker:
    """A configuration swept in lockstep with a `ContactEnvironment`."""

    def __init__(self, env: ContactEnvironment, state: np.ndarray, slab: SlabSpec | None = None) -> None:
        self._env = env
        self.state = state
        self.slab = slab

    def sweep(self, lo: int, hi: int) -> None:
        rep = self._env.rep
        if self.slab is None:
            sweep.sweep_forward(rep.kinds, rep.src, rep.dst, self.state, lo, hi)
        else:
            sweep.sweep_slab(
                rep.times, rep.kinds, rep.src, rep.dst, self._env.coord0f, self.state, lo, hi,
                float(self.slab.K), float(self.slab.L), float(self.slab.offset),
            )

    def rightmost(self) -> int | None:
        """Rightmost occupied first coordinate, in the environment's local frame."""
        occupied = np.flatnonzero(self._visible())
        if occupied.size == 0:
            return None
        return int(self._env.rep.box.coord0[occupied].max()) - int(self._env.origin[0])

    def value(self, x_local: Sequence[int]) -> int:
        return int(self._visible()[self._env.site_index(x_local)])

    def _visible(self) -> np.ndarray:
        if self.slab is None:
            return self.state
        return self.state & self.slab.section(self._env.rep.box, self._env.start_time + self._env.now)


class ContactEnvironment:
    """Trajectory accessor ξ_t(x) for a walker, swept forward on demand.

    Local time 0 is global time `start_time` of the rep, local site x is
    global site x + `origin`.  Events at a timestamp are applied before any
    read at that timestamp.
    """

    def __init__(
        self,
        rep: GraphicalRep,
        initial: Configuration,
        start_time: float = 0.0,
        origin: Sequence[int] | None = None,
        safe_radius: int | None = None,
    ) -> None:
        _check_box(rep, initial)
        _check_times(rep, start_time, start_time)
        self.rep = rep
        self.state = initial.occupied.copy()
        self.start_time = float(start_time)
        self.origin = np.zeros(rep.box.dimension, dtype=np.int64) if origin is None else np.asarray(origin, dtype=np.int64)
        self.safe_radius = int(rep.box.offsets.min()) if safe_radius is None else int(safe_radius)
        self.now = 0.0
        self._cursor = int(np.searchsorted(rep.times, self.start_time, side="right"))
        self._trackers: list[Tracker] = []
        self.coord0f = rep.box.coord0.astype(np.float64)

    @classmethod
    def frozen(cls, box: Box, occupied: bool | Configuration, safe_radius: int | None = None) -> ContactEnvironment:
        """Environment with no events, constant in time."""
        if isinstance(occupied, Configuration):
            initial = occupied
        else:
            initial = Configuration.full(box) if occupied else Configuration.empty(box)
        return cls(GraphicalRep.no_events(box), initial, safe_radius=safe_radius)

    @property
    def horizon(self) -> float:
        return self.rep.horizon - self.start_time

    def advance_to(self, t: float) -> None:
        if t < self.now:
            raise TimeOutOfRange(f"environment is at {self.now}, cannot rewind to {t}")
        if t > self.horizon:
            raise TimeOutOfRange(f"time {t} beyond environment horizon {self.horizon}")
        hi = int(np.searchsorted(self.rep.times, self.start_time + t, side="right"))
        if hi > self._cursor:
            sweep.sweep_forward(self.rep.kinds, self.rep.src, self.rep.dst, self.state, self._cursor, hi)
            for tracker in self._trackers:
                tracker.sweep(self._cursor, hi)
            self._cursor = hi
        self.now = t

    def site_index(self, x_local: Sequence[int]) -> int:
        site = np.asarray(x_local, dtype=np.int64) + self.origin
        if np.abs(site).max(initial=0) > self.safe_radius or not self.rep.box.contains(site):
            raise WalkerLeftSafeRegion(site, self.safe_radius)
        return self.rep.box.index(site)

    def value(self, x_local: Sequence[int]) -> int:
        return int(self.state[self.site_index(x_local)])

    def configuration(self) -> Configuration:
        return Configuration(self.rep.box, self.state.copy())

    def track(
        self,
        initial: np.ndarray | None = None,
        mask: np.ndarray | None = None,
        slab: SlabSpec | None = None,
    ) -> Tracker:
        """Start a coupled configuration at the current time.

        It starts from `initial` (default: the current state), restricted to
        `mask`, and is swept by every later `advance_to`.
        """
        state = (self.state if initial is None else initial).copy()
        if mask is not None:
            state &= mask
        tracker = Tracker(self, state, slab)
        self._trackers.append(tracker)
        return tracker

    def release(self, tracker: Tracker) -> None:
        self._trackers.remove(tracker)
