"""
Random walk driven by a dynamic environment through the O/V coupling.

At its k-th jump time J_k the walker reads one Boolean f_k (by default the
environment at its own site).  If f_k = 1 it consumes the next unused
uniform of O and jumps with the state-1 kernel, otherwise the next unused
uniform of V and the state-0 kernel.  ρ(k) counts the ones read so far.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .errors import ObserverContractViolation, SimulationError, TimeOutOfRange
from .graphical import ContactEnvironment, Tracker
from .kernel import KernelSpec

logger = logging.getLogger(__name__)

DRIVER_ROLES = ("jumps", "O", "V", "U")


@dataclass(frozen=True, eq=False)
class WalkDriver:
    """Jump times of a rate-γ Poisson clock plus the uniform sequences O, V (and U)."""

    gamma: float
    horizon: float
    jump_times: np.ndarray
    occupied: np.ndarray
    vacant: np.ndarray
    single: np.ndarray | None = None

    @property
    def n_jumps(self) -> int:
        return int(self.jump_times.size)

    def count_until(self, t: float) -> int:
        """N_t, the number of jump times in [0, t]."""
        return int(np.searchsorted(self.jump_times, t, side="right"))

    def restart(self, n: int, occupied_used: int, vacant_used: int, t: float) -> WalkDriver:
        """Driver of the walk restarted at time t after n jumps.

        Re-indexes the clock from its (n+1)-th jump and the uniform sequences
        past the entries already consumed.
        """
        if t > self.horizon:
            raise TimeOutOfRange(f"restart time {t} beyond driver horizon {self.horizon}")
        return WalkDriver(
            gamma=self.gamma,
            horizon=self.horizon - t,
            jump_times=self.jump_times[n:] - t,
            occupied=self.occupied[occupied_used:],
            vacant=self.vacant[vacant_used:],
            single=None if self.single is None else self.single[n:],
        )

    def describe(self) -> dict:
        return {"gamma": self.gamma, "horizon": self.horizon, "jumps": self.n_jumps}


def sample_driver(gamma: float, horizon: float, streams: Mapping[str, np.random.Generator]) -> WalkDriver:
    """Draw a driver from independent streams keyed by role ("jumps", "O", "V", optional "U")."""
    if gamma <= 0:
        raise SimulationError(f"master rate must be positive, got {gamma}")
    if horizon <= 0:
        raise TimeOutOfRange(f"horizon must be positive, got {horizon}")
    clock = streams["jumps"]
    n = int(clock.poisson(gamma * horizon))
    jump_times = np.sort(horizon * (1.0 - clock.random(n)))
    # n uniforms per sequence: at most n of each are ever consumed.
    occupied = streams["O"].random(n)
    vacant = streams["V"].random(n)
    single = streams["U"].random(n) if "U" in streams else None
    return WalkDriver(gamma, float(horizon), jump_times, occupied, vacant, single)


@dataclass(frozen=True, eq=False)
class WalkResult:
    """Discrete path S_k, jump times J_k, counter ρ(k) and the bits f_k that drove it."""

    gamma: float
    horizon: float
    positions: np.ndarray
    jump_times: np.ndarray
    rho: np.ndarray
    bits: np.ndarray

    @property
    def n_jumps(self) -> int:
        return int(self.jump_times.size)

    @property
    def occupied_used(self) -> int:
        return int(self.rho[-1])

    @property
    def vacant_used(self) -> int:
        return self.n_jumps - self.occupied_used

    def count_until(self, t: float) -> int:
        return int(np.searchsorted(self.jump_times, t, side="right"))

    def position_at(self, t: float) -> np.ndarray:
        """W_t = S_{N_t}."""
        return self.positions[self.count_until(t)]

    def rho_count_at(self, t: float) -> int:
        return int(self.rho[self.count_until(t)])

    def rho_at(self, t: float) -> float:
        """ρ_t = ρ(N_t) / γ."""
        return self.rho_count_at(t) / self.gamma

    def csv_rows(self) -> list[list]:
        """Rows (k, J_k, S_k coordinates..., ρ(k)); row 0 carries J = 0."""
        rows = []
        for k in range(self.n_jumps + 1):
            jump = 0.0 if k == 0 else float(self.jump_times[k - 1])
            rows.append([k, jump, *self.positions[k].tolist(), int(self.rho[k])])
        return rows

    def summary(self, t: float | None = None) -> dict:
        t = self.horizon if t is None else t
        return {
            "t": t,
            "W": self.position_at(t).tolist(),
            "rho_count": self.rho_count_at(t),
            "rho": self.rho_at(t),
            "jumps": self.count_until(t),
        }


class EnvironmentView:
    """What an observer may see at step k: the environment at time J_k and before."""

    def __init__(self, env: ContactEnvironment) -> None:
        self._env = env

    @property
    def now(self) -> float:
        return self._env.now

    @property
    def rep(self):
        return self._env.rep

    @property
    def origin(self) -> np.ndarray:
        return self._env.origin

    @property
    def start_time(self) -> float:
        return self._env.start_time

    def value(self, x: Sequence[int], at: float | None = None) -> int:
        if at is not None and at > self._env.now:
            raise ObserverContractViolation(f"read at {at} after current jump time {self._env.now}")
        if at is not None and at < self._env.now:
            raise TimeOutOfRange("environment history before the current jump time is not retained")
        return self._env.value(x)

    def track(self, mask: np.ndarray | None = None, initial: np.ndarray | None = None, slab=None) -> Tracker:
        return self._env.track(initial=initial, mask=mask, slab=slab)

    def release(self, tracker: Tracker) -> None:
        self._env.release(tracker)


class Observer(Protocol):
    def start(self, view: EnvironmentView) -> None: ...

    def observe(self, k: int, position: np.ndarray, time: float, view: EnvironmentView) -> int: ...


class IdentityObserver:
    """f_k = ξ_{J_k}(S_k)."""

    def start(self, view: EnvironmentView) -> None:
        pass

    def observe(self, k, position, time, view) -> int:
        return view.value(position)


class ConstantObserver:
    def __init__(self, value: int) -> None:
        self.value = value

    def start(self, view: EnvironmentView) -> None:
        pass

    def observe(self, k, position, time, view) -> int:
        return self.value


class MaskedObserver:
    """f_k = 1_{gate(k, S_k, J_k)} · ξ_{J_k}(S_k)."""

    def __init__(self, gate: Callable[[int, np.ndarray, float], bool]) -> None:
        self.gate = gate

    def start(self, view: EnvironmentView) -> None:
        pass

    def observe(self, k, position, time, view) -> int:
        return view.value(position) if self.gate(k, position, time) else 0


def walker_window(kernel: KernelSpec, horizon: float) -> int:
    """Radius the walker stays within up to `horizon` except with negligible probability."""
    speed = max(np.abs(kernel.drift0).sum(), np.abs(kernel.drift1).sum())
    spread = 6.0 * kernel.max_range * math.sqrt(kernel.gamma * horizon)
    return int(math.ceil(speed * horizon + spread)) + 1


def _iterate(
    kernel: KernelSpec,
    env: ContactEnvironment,
    driver: WalkDriver,
    decide: Callable[[int, np.ndarray, float], int],
    single_u: bool = False,
) -> WalkResult:
    if driver.horizon > env.horizon:
        raise TimeOutOfRange(f"driver horizon {driver.horizon} beyond environment horizon {env.horizon}")
    if not math.isclose(driver.gamma, kernel.gamma):
        raise SimulationError(f"driver rate {driver.gamma} differs from kernel rate {kernel.gamma}")
    n = driver.n_jumps
    if single_u:
        if driver.single is None:
            raise SimulationError("driver has no single uniform sequence")
        steps1 = kernel.jumps(1, driver.single[:n])
        steps0 = kernel.jumps(0, driver.single[:n])
    else:
        steps1 = kernel.jumps(1, driver.occupied[:n])
        steps0 = kernel.jumps(0, driver.vacant[:n])

    positions = np.zeros((n + 1, kernel.dimension), dtype=np.int64)
    rho = np.zeros(n + 1, dtype=np.int64)
    bits = np.zeros(n, dtype=np.int8)
    position = positions[0].copy()
    count = 0
    for k in range(n):
        t = float(driver.jump_times[k])
        env.advance_to(t)
        b = int(decide(k, position, t))
        if b not in (0, 1):
            raise ObserverContractViolation(f"observer returned {b!r} at step {k}")
        if single_u:
            step = steps1[k] if b else steps0[k]
        else:
            step = steps1[count] if b else steps0[k - count]
        position = position + step
        count += b
        positions[k + 1] = position
        rho[k + 1] = count
        bits[k] = b
    return WalkResult(driver.gamma, driver.horizon, positions, driver.jump_times[:n].copy(), rho, bits)


def run_walk(kernel: KernelSpec, env: ContactEnvironment, driver: WalkDriver) -> WalkResult:
    """The coupled walk: read ξ at (S_k, J_k), consume O or V accordingly."""
    return _iterate(kernel, env, driver, lambda k, position, t: env.value(position))


def run_walk_single_u(kernel: KernelSpec, env: ContactEnvironment, driver: WalkDriver) -> WalkResult:
    """Variant where both kernels read the same uniform U_k at step k."""
    return _iterate(kernel, env, driver, lambda k, position, t: env.value(position), single_u=True)


def run_walk_general(
    kernel: KernelSpec,
    env: ContactEnvironment,
    driver: WalkDriver,
    observer: Observer,
) -> WalkResult:
    """The walk driven by an observer's bits f_k; ρ^{(obs)}(k) = Σ_{i<k} f_i."""
    view = EnvironmentView(env)
    observer.start(view)
    return _iterate(kernel, env, driver, lambda k, position, t: observer.observe(k, position, t, view))


def rho_ordered(lower: WalkResult, upper: WalkResult) -> bool:
    """ρ(k) of `lower` never exceeds that of `upper` (same driver assumed)."""
    n = min(lower.rho.size, upper.rho.size)
    return bool(np.all(lower.rho[:n] <= upper.rho[:n]))
