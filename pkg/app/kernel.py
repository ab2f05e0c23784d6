"""
Two-state jump kernels of the walker.

A kernel is a pair of finite rate tables α(0, ·), α(1, ·) over Z^d.  Both
rows are padded at the origin up to the master rate γ so that a single
rate-γ Poisson clock drives the walk, and the jump laws are stored as CDFs
over one fixed enumeration of the support.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyRow, NegativeRate, SimulationError

logger = logging.getLogger(__name__)

# Tolerance (in units of the last place at 1.0) for the accumulated CDF sum.
CDF_ULP_TOLERANCE = 8

STATES = (0, 1)


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Immutable, validated kernel pair.

    `displacements` lists the support in enumeration order: sorted by
    (‖z‖_1, lexicographic) with the origin appended last.  `cdf0` and `cdf1`
    hold the breakpoints p_i(0) = 0, p_i(1), ..., p_i(n) = 1.
    """

    dimension: int
    displacements: np.ndarray
    rates0: np.ndarray
    rates1: np.ndarray
    gamma: float
    cdf0: np.ndarray
    cdf1: np.ndarray
    drift0: np.ndarray
    drift1: np.ndarray

    def rates(self, state: int) -> np.ndarray:
        return self.rates1 if state else self.rates0

    def cdf(self, state: int) -> np.ndarray:
        return self.cdf1 if state else self.cdf0

    def drift(self, state: int) -> np.ndarray:
        return self.drift1 if state else self.drift0

    @property
    def max_range(self) -> int:
        support = (self.rates0 > 0) | (self.rates1 > 0)
        norms = np.abs(self.displacements[support]).sum(axis=1)
        return int(norms.max()) if norms.size else 0

    def jump_indices(self, state: int, u: np.ndarray) -> np.ndarray:
        """Enumeration index n with u ∈ [p(n-1), p(n)) for every entry of u."""
        breakpoints = self.cdf(state)[1:]
        idx = np.searchsorted(breakpoints, np.asarray(u, dtype=np.float64), side="right")
        # u < 1 always lands inside the table; guard against u == 1.0 from a caller.
        return np.minimum(idx, len(breakpoints) - 1)

    def jumps(self, state: int, u: np.ndarray) -> np.ndarray:
        """Vectorised sample_jump: one displacement row per uniform."""
        return self.displacements[self.jump_indices(state, u)]

    def to_table(self) -> list[dict]:
        """Post-padding rate table, echoed into run manifests."""
        table = []
        for state in STATES:
            for z, rate in zip(self.displacements, self.rates(state)):
                if rate > 0:
                    table.append(
                        {"state": state, "displacement": [int(v) for v in z], "rate": float(rate)}
                    )
        return table

    def summary(self) -> dict:
        return {
            "dimension": self.dimension,
            "gamma": self.gamma,
            "drift0": self.drift0.tolist(),
            "drift1": self.drift1.tolist(),
            "max_range": self.max_range,
            "table": self.to_table(),
        }


def _enumeration_key(z: tuple[int, ...]) -> tuple:
    return (sum(abs(v) for v in z), z)


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def build_kernel(
    rates: Mapping[tuple[int, tuple[int, ...]], float] | Iterable[tuple[int, Iterable[int], float]],
    dimension: int,
    gamma: float | None = None,
) -> KernelSpec:
    """Validate a rate table and build the padded kernel pair.

    `rates` is either a mapping (state, displacement) -> rate or an iterable
    of (state, displacement, rate) triples; repeated keys are summed.  A
    `gamma` override may only raise the master rate (more origin padding).
    """
    if dimension < 1:
        raise DimensionMismatch(f"dimension must be positive, got {dimension}")

    items = rates.items() if isinstance(rates, Mapping) else (((s, z), r) for s, z, r in rates)

    table: dict[tuple[int, tuple[int, ...]], float] = {}
    for (state, displacement), rate in items:
        if state not in STATES:
            raise SimulationError(f"state must be 0 or 1, got {state!r}")
        z = tuple(int(v) for v in displacement)
        if len(z) != dimension:
            raise DimensionMismatch(
                f"displacement {z} has arity {len(z)}, kernel dimension is {dimension}"
            )
        rate = float(rate)
        if not np.isfinite(rate) or rate < 0:
            raise NegativeRate(f"rate α({state}, {z}) = {rate} is not a nonnegative number")
        table[(state, z)] = table.get((state, z), 0.0) + rate

    origin = (0,) * dimension
    for state in STATES:
        if not any(r > 0 for (s, _), r in table.items() if s == state):
            raise EmptyRow(f"state {state} has no positive rate")

    support = sorted({z for (_, z) in table if z != origin}, key=_enumeration_key)
    displacements = np.array(support + [origin], dtype=np.int64).reshape(-1, dimension)
    norms = np.abs(displacements).sum(axis=1)

    raw = np.zeros((2, len(displacements)))
    for (state, z), rate in table.items():
        raw[state, len(support) if z == origin else support.index(z)] = rate

    # γ = max_i ( α(i,o) + Σ_z ‖z‖_1 α(i,z) ) on the unpadded rows.
    weighted = raw[:, -1] + (raw[:, :-1] * norms[:-1]).sum(axis=1)
    minimal = float(weighted.max())
    if gamma is None:
        gamma = minimal
    elif gamma < minimal:
        raise SimulationError(f"master rate override {gamma} is below the kernel's {minimal}")
    gamma = float(gamma)

    padded = raw.copy()
    padded[:, -1] = gamma - raw[:, :-1].sum(axis=1)

    cdfs = []
    for state in STATES:
        cumulative = np.concatenate(([0.0], np.cumsum(padded[state]) / gamma))
        error = abs(cumulative[-1] - 1.0)
        if error > CDF_ULP_TOLERANCE * np.spacing(1.0):
            raise SimulationError(
                f"state {state} CDF ends at {cumulative[-1]!r}, off by more than "
                f"{CDF_ULP_TOLERANCE} ulp"
            )
        cumulative[-1] = 1.0
        cumulative = np.maximum.accumulate(np.clip(cumulative, 0.0, 1.0))
        cdfs.append(cumulative)

    drifts = padded @ displacements.astype(np.float64)

    kernel = KernelSpec(
        dimension=dimension,
        displacements=_frozen(displacements),
        rates0=_frozen(padded[0].copy()),
        rates1=_frozen(padded[1].copy()),
        gamma=gamma,
        cdf0=_frozen(cdfs[0]),
        cdf1=_frozen(cdfs[1]),
        drift0=_frozen(drifts[0].copy()),
        drift1=_frozen(drifts[1].copy()),
    )
    logger.debug("built kernel d=%d gamma=%g support=%d", dimension, gamma, len(displacements))
    return kernel


def sample_jump(kernel: KernelSpec, state: int, u: float) -> tuple[int, ...]:
    """Displacement z_n for the unique n with u ∈ [p_state(n-1), p_state(n))."""
    idx = int(kernel.jump_indices(state, np.array([u]))[0])
    return tuple(int(v) for v in kernel.displacements[idx])


def check_properties(kernel: KernelSpec) -> dict:
    """Ellipticity, γ, drifts and the maximal jump length of a kernel."""
    elliptic = True
    for j in range(kernel.dimension):
        for sign in (1, -1):
            e = np.zeros(kernel.dimension, dtype=np.int64)
            e[j] = sign
            hit = np.all(kernel.displacements == e, axis=1)
            if not hit.any() or kernel.rates0[hit][0] <= 0 or kernel.rates1[hit][0] <= 0:
                elliptic = False
    return {
        "elliptic": elliptic,
        "gamma": kernel.gamma,
        "drifts": {"0": kernel.drift0.tolist(), "1": kernel.drift1.tolist()},
        "max_range": kernel.max_range,
    }
