"""Pieces shared by the estimators: result container, boxes, initial laws, walk setup."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..config import EnvSpec
from ..graphical import (
    Box,
    Configuration,
    ContactEnvironment,
    GraphicalRep,
    sample_bernoulli_config,
    sample_rep,
    sample_upper_invariant,
)
from ..kernel import KernelSpec
from ..rng import ReplicaStreams
from ..walker import WalkDriver, sample_driver, walker_window


@dataclass
class EstimatorResult:
    """What a subcommand hands to the output writer."""

    subcommand: str
    report: dict
    columns: list[str]
    rows: list[dict]
    inconclusive: list[str] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    error: str | None = None


def left_mask(box: Box) -> np.ndarray:
    """Sites with first coordinate < 0."""
    return box.coord0 < 0


def initial_configuration(
    env: EnvSpec,
    law: str,
    box: Box,
    streams: ReplicaStreams,
    lam: float | None = None,
    density: float | None = None,
) -> Configuration:
    """Initial configuration of the environment for one replica.

    "bernoulli" draws from the "init" stream, the upper-invariant laws burn
    in on their own "burn-in" rep; the "_left" laws are masked to x_1 < 0.
    """
    base = law.removesuffix("_left")
    if base == "ones":
        config = Configuration.full(box)
    elif base == "zeros":
        config = Configuration.empty(box)
    elif base == "bernoulli":
        config = sample_bernoulli_config(box, env.density if density is None else density, streams.get("init"))
    elif base == "upper_invariant":
        config = sample_upper_invariant(
            box, env.lam if lam is None else lam, env.burn_in, streams.get("burn-in"), max_events=env.max_events
        )
    else:
        raise ValueError(f"unknown initial law {law!r}")
    if law.endswith("_left"):
        config = config.masked(left_mask(box))
    return config


def environment_box(env: EnvSpec, horizon: float, window: int, lam: float | None = None) -> Box:
    box = Box(
        env.dimension,
        env.resolve_radius(horizon, window, lam),
        env.boundary,
        transverse_radius=env.transverse_radius,
    )
    box.check_budget()
    return box


def walk_window(kernel: KernelSpec, env: EnvSpec, horizon: float) -> int:
    return env.window if env.window is not None else walker_window(kernel, horizon)


@dataclass
class WalkSetup:
    """One replica's rep, safe radius and driver for a walk up to `horizon`."""

    box: Box
    rep: GraphicalRep
    safe_radius: int
    driver: WalkDriver

    def environment(self, initial: Configuration, rep: GraphicalRep | None = None) -> ContactEnvironment:
        return ContactEnvironment(rep or self.rep, initial, safe_radius=self.safe_radius)


def walk_setup(
    kernel: KernelSpec,
    env: EnvSpec,
    horizon: float,
    streams: ReplicaStreams,
    lam: float | None = None,
    single_u: bool = False,
) -> WalkSetup:
    """Sample the rep (at `lam`, default the environment's) and the driver of one replica."""
    lam = env.lam if lam is None else lam
    window = walk_window(kernel, env, horizon)
    box = environment_box(env, horizon, window, lam)
    rep = sample_rep(box, lam, horizon, streams.get("rep"), max_events=env.max_events, seed_label="rep")
    driver = sample_driver(kernel.gamma, horizon, streams.driver_streams(single=single_u))
    return WalkSetup(box, rep, min(window, int(box.offsets.min())), driver)
