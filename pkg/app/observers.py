"""
Observer schemes that let the walker read the environment only at selected steps.

`RightmostObserver` (d = 1) reads ξ only while the walker is left of the
rightmost particle descending from the half-line it has already explored.
`SlabObserver` (d >= 2) reads a family of slab-truncated processes ζ and only
when the walker enters a slab left of every slab it has observed before.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence

import numpy as np

from . import sweep
from .errors import DimensionMismatch, ObserverContractViolation
from .graphical import DEFAULT_MAX_EVENTS, Box, GraphicalRep, SlabSpec, sample_rep
from .walker import EnvironmentView

logger = logging.getLogger(__name__)


class RenewalObserver:
    """Bookkeeping shared by the schemes: the steps that renewed the observation."""

    def __init__(self) -> None:
        self.renewal_steps: list[int] = []
        self.observed_steps: list[int] = []

    @property
    def renewal_times(self) -> list[int]:
        """T_1 < T_2 < ... (T_0 = 0 implicit)."""
        return [k + 1 for k in self.renewal_steps]

    @property
    def taus(self) -> list[int]:
        """τ_k = T_k - T_{k-1}."""
        times = [0] + self.renewal_times
        return [b - a for a, b in zip(times, times[1:])]


class RightmostObserver(RenewalObserver):
    """d = 1 scheme; `fronts[k]` is R_k (None when no particle descends from the sources)."""

    def __init__(self) -> None:
        super().__init__()
        self.fronts: list[int | None] = []
        self._tracker = None

    def _sources(self, view: EnvironmentView, z: int) -> np.ndarray:
        return view.rep.box.coord0 - int(view.origin[0]) <= z

    def start(self, view: EnvironmentView) -> None:
        if view.rep.box.dimension != 1:
            raise DimensionMismatch("the rightmost-particle observer needs d = 1")
        self._tracker = view.track(mask=self._sources(view, 0))

    def observe(self, k: int, position: np.ndarray, time: float, view: EnvironmentView) -> int:
        front = None if self._tracker is None else self._tracker.rightmost()
        self.fronts.append(front)
        s = int(position[0])
        if front is not None and s <= front:
            bit = view.value(position)
            anchor = s
            self.renewal_steps.append(k)
            self.observed_steps.append(k)
        else:
            bit = 0
            anchor = front
        if self._tracker is not None:
            view.release(self._tracker)
        self._tracker = None if anchor is None else view.track(mask=self._sources(view, anchor))
        return bit


class SlabProcess:
    """One slab-truncated process started from the full slab section at time 0."""

    def __init__(self, rep: GraphicalRep, slab: SlabSpec) -> None:
        self.rep = rep
        self.slab = slab
        self.state = slab.section(rep.box, 0.0).copy()
        self.now = 0.0
        self._cursor = 0
        self._coord0 = rep.box.coord0.astype(np.float64)

    def advance_to(self, t: float) -> None:
        if t < self.now:
            raise ObserverContractViolation(f"slab process at {self.now} cannot be read at earlier time {t}")
        hi = int(np.searchsorted(self.rep.times, t, side="right"))
        if hi > self._cursor:
            sweep.sweep_slab(
                self.rep.times, self.rep.kinds, self.rep.src, self.rep.dst, self._coord0,
                self.state, self._cursor, hi, float(self.slab.K), float(self.slab.L), float(self.slab.offset),
            )
            self._cursor = hi
        self.now = t

    def value(self, site: Sequence[int], t: float) -> int:
        self.advance_to(t)
        box = self.rep.box
        if not box.contains(site):
            return 0
        if not self.slab.contains(site[0], t):
            return 0
        return int(self.state[box.index(site)])


class SlabField:
    """The field ζ_t(x) = ζ^{(i)}_t(x - 2Ki e_1) for (x, t) in slab Π_i = 2Ki + S_{K,L}.

    `mode="shared"` truncates the walker's own rep (so ζ <= ξ pathwise);
    `mode="independent"` samples one rep per slab lazily from
    `stream_factory(i)` and reads it at transverse coordinates 0, which by
    translation invariance in those directions has the same law.
    """

    def __init__(
        self,
        K: int,
        L: float = 0.0,
        mode: str = "independent",
        lam: float | None = None,
        horizon: float | None = None,
        dimension: int | None = None,
        transverse_radius: int | None = None,
        stream_factory: Callable[[int], np.random.Generator] | None = None,
        max_events: int = DEFAULT_MAX_EVENTS,
    ) -> None:
        if mode not in ("shared", "independent"):
            raise ValueError(f"unknown slab field mode {mode!r}")
        self.K = int(K)
        self.L = float(L)
        self.mode = mode
        self.lam = lam
        self.horizon = horizon
        self.dimension = dimension
        self.transverse_radius = self.K if transverse_radius is None else int(transverse_radius)
        self.stream_factory = stream_factory
        self.max_events = max_events
        self._processes: dict[int, SlabProcess] = {}
        self._rep: GraphicalRep | None = None

    def attach(self, view: EnvironmentView) -> None:
        if view.rep.box.dimension < 2:
            raise DimensionMismatch("slab observers need d >= 2")
        if self.dimension is None:
            self.dimension = view.rep.box.dimension
        if self.mode == "independent" and (self.lam is None or self.horizon is None or self.stream_factory is None):
            raise ValueError("independent slab fields need lam, horizon and a stream factory")
        if self.mode == "shared":
            if view.start_time != 0.0 or np.any(view.origin != 0):
                raise ObserverContractViolation("shared slab fields need an environment started at the origin at time 0")
            self._rep = view.rep

    def slab_index(self, x1: float, t: float) -> int:
        """Index i with x1 - L·t ∈ [2Ki - K, 2Ki + K]; boundary points go to the lower index."""
        v = x1 - self.L * t
        return int(math.ceil((v - self.K) / (2 * self.K)))

    def covers(self, i: int, x1: float, t0: float, t1: float) -> bool:
        """{x1} × [t0, t1) lies in slab i."""
        lo, hi = sorted((x1 - self.L * t0, x1 - self.L * t1))
        return lo >= 2 * self.K * i - self.K and hi <= 2 * self.K * i + self.K

    def _process(self, i: int) -> SlabProcess:
        process = self._processes.get(i)
        if process is None:
            if self.mode == "shared":
                process = SlabProcess(self._rep, SlabSpec(self.K, self.L, offset=2 * self.K * i))
            else:
                radius = self.K + int(math.ceil(abs(self.L) * self.horizon)) + 1
                box = Box(self.dimension, radius, "truncate", transverse_radius=self.transverse_radius)
                rep = sample_rep(
                    box, self.lam, self.horizon, self.stream_factory(i),
                    max_events=self.max_events, seed_label=f"observer-aux-{i}",
                )
                process = SlabProcess(rep, SlabSpec(self.K, self.L, 0.0))
            self._processes[i] = process
        return process

    def value(self, i: int, position: Sequence[int], t: float) -> int:
        process = self._process(i)
        if self.mode == "shared":
            return process.value(tuple(int(v) for v in position), t)
        local = (int(position[0]) - 2 * self.K * i,) + (0,) * (len(position) - 1)
        return process.value(local, t)

    @property
    def slabs_sampled(self) -> int:
        return len(self._processes)


class SlabObserver(RenewalObserver):
    """d >= 2 scheme over slabs Π_i; `labels[k]` is R_k (R_0 = 1), δ is the look-back."""

    def __init__(self, field: SlabField, delta: float = 0.0) -> None:
        super().__init__()
        self.field = field
        self.delta = float(delta)
        self.label = 1
        self.labels: list[int] = []

    def start(self, view: EnvironmentView) -> None:
        self.field.attach(view)

    def observe(self, k: int, position: np.ndarray, time: float, view: EnvironmentView) -> int:
        self.labels.append(self.label)
        i = self.field.slab_index(float(position[0]), time)
        if i >= self.label:
            return 0
        self.label = i
        self.renewal_steps.append(k)
        if self.delta > 0 and not self.field.covers(i, float(position[0]), time - self.delta, time):
            return 0
        self.observed_steps.append(k)
        return self.field.value(i, position, time)

    @property
    def new_slab_fraction(self) -> float:
        return len(self.renewal_steps) / len(self.labels) if self.labels else 0.0


class FieldObserver:
    """f_k = ζ_{J_k}(S_k) for every step: the plain walk in the slab field."""

    def __init__(self, field: SlabField) -> None:
        self.field = field

    def start(self, view: EnvironmentView) -> None:
        self.field.attach(view)

    def observe(self, k: int, position: np.ndarray, time: float, view: EnvironmentView) -> int:
        return self.field.value(self.field.slab_index(float(position[0]), time), position, time)
