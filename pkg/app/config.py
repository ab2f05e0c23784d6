"""
Experiment configuration.

Experiments are described in TOML files and validated into frozen
dataclasses before any sampling happens.  The resolved form (defaults filled
in, "auto" radius resolved, kernel padded) is what gets echoed to manifests.
"""

from __future__ import annotations

import logging
import math
import os
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

from .errors import ParseError, SimulationError, ValidationError
from .graphical import BOUNDARY_MODES, DEFAULT_MAX_EVENTS, DEFAULT_PAD, safety_radius
from .kernel import KernelSpec, build_kernel
from .walker import walker_window

logger = logging.getLogger(__name__)

INITIAL_LAWS = ("ones", "zeros", "bernoulli", "upper_invariant", "ones_left", "upper_invariant_left")

DEFAULT_REPLICAS = 100
DEFAULT_ABORT_BUDGET = 0.01
DEFAULT_CONFIDENCE = 0.95

# Estimator options and their defaults; None means "number or list, no default".
OPTION_DEFAULTS: dict[str, Any] = {
    "s": 5.0,
    "k_max": 5,
    "shared_rep": False,
    "rho_hat": None,
    "pilot_replicas": None,
    "initials": ["ones", "zeros", "bernoulli"],
    "single_u": False,
    "exact_cone": False,
    "cone_step": 1.0,
    "cone_tail": 1.0,
    "reference": 1,
    "cone_initial": "zeros",
    "t_end": 50.0,
    "observer": "d1_rightmost",
    "slab_mode": "independent",
    "delta": 0.0,
    "beta": 0.5,
    "horizons": None,
    "growth_a": None,
    "growth_l": None,
    "cluster_a": 0.5,
    "lo": 0.5,
    "hi": 4.0,
    "iterations": 8,
    "threshold": 0.5,
    "oracle_instances": 200,
}

GRID_NAMES = ("t", "lambda", "T", "K", "L", "epsilon", "m", "density")


@dataclass(frozen=True)
class EnvSpec:
    """Contact-process environment: rate, box geometry and initial law."""

    lam: float
    dimension: int = 1
    radius: int | None = None
    radius_auto: bool = True
    boundary: str = "truncate"
    initial: str = "ones"
    density: float = 0.5
    burn_in: float = 50.0
    pad: float = DEFAULT_PAD
    window: int | None = None
    transverse_radius: int | None = None
    max_events: int = DEFAULT_MAX_EVENTS
    resolved_window: int | None = None

    def resolve_radius(self, horizon: float, window: int, lam: float | None = None) -> int:
        """Box radius for data read within `window` up to `horizon` (safety rule when auto)."""
        if not self.radius_auto and self.radius is not None:
            return self.radius
        return max(1, safety_radius(window, self.lam if lam is None else lam, horizon, self.pad))

    def at(self, lam: float) -> EnvSpec:
        return replace(self, lam=lam)


@dataclass(frozen=True)
class Grids:
    t: tuple[float, ...] = ()
    lam: tuple[float, ...] = ()
    T: tuple[float, ...] = ()
    K: tuple[int, ...] = ()
    L: tuple[float, ...] = ()
    epsilon: tuple[float, ...] = ()
    m: tuple[float, ...] = ()
    density: tuple[float, ...] = ()


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    seed: int
    replicas: int
    environment: EnvSpec
    grids: Grids = field(default_factory=Grids)
    kernel_table: tuple = ()
    gamma: float | None = None
    output_dir: Path | None = None
    abort_budget: float = DEFAULT_ABORT_BUDGET
    confidence: float = DEFAULT_CONFIDENCE
    options: dict = field(default_factory=lambda: dict(OPTION_DEFAULTS))
    source: str | None = None

    @property
    def kernel(self) -> KernelSpec | None:
        if not self.kernel_table:
            return None
        return build_kernel(self.kernel_table, self.environment.dimension, gamma=self.gamma)

    def option(self, key: str) -> Any:
        return self.options.get(key, OPTION_DEFAULTS.get(key))

    def output_path(self, root: str | os.PathLike | None = None) -> Path:
        if self.output_dir is not None:
            return Path(self.output_dir)
        return Path(root or "runs") / self.name

    def with_overrides(self, **overrides: Any) -> ExperimentConfig:
        """CLI overrides; None values are ignored."""
        top = {k: v for k, v in overrides.items() if v is not None and k in {"seed", "replicas", "output_dir"}}
        options = {k: v for k, v in overrides.items() if v is not None and k in OPTION_DEFAULTS}
        if "seed" in top:
            _check_seed(top["seed"])
        if "replicas" in top and top["replicas"] < 1:
            raise ValidationError("replicas", "must be at least 1")
        if "output_dir" in top:
            top["output_dir"] = Path(top["output_dir"])
        return replace(self, **top, options={**self.options, **options})

    def to_dict(self) -> dict:
        data = asdict(self)
        data["output_dir"] = None if self.output_dir is None else str(self.output_dir)
        data["kernel_table"] = [[s, list(z), r] for s, z, r in self.kernel_table]
        kernel = self.kernel
        data["kernel"] = None if kernel is None else kernel.summary()
        return data


def _check_seed(seed: Any) -> None:
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ValidationError("seed", "must be an integer in [0, 2^64)")


def _number(data: dict, key: str, prefix: str, default: Any = None, minimum: float | None = None,
            positive: bool = False) -> Any:
    value = data.get(key, default)
    if value is None:
        return None
    name = f"{prefix}{key}"
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ValidationError(name, f"expected a number, got {value!r}")
    if positive and value <= 0:
        raise ValidationError(name, f"must be positive, got {value}")
    if minimum is not None and value < minimum:
        raise ValidationError(name, f"must be at least {minimum}, got {value}")
    return value


def _integer(data: dict, key: str, prefix: str, default: Any = None, minimum: int | None = None) -> Any:
    value = data.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{prefix}{key}", f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValidationError(f"{prefix}{key}", f"must be at least {minimum}, got {value}")
    return value


def _parse_kernel(raw: Any, dimension: int) -> tuple:
    if not isinstance(raw, list) or not raw:
        raise ValidationError("kernel", "expected a non-empty list of [state, displacement, rate] triples")
    table = []
    seen = set()
    for n, entry in enumerate(raw):
        name = f"kernel[{n}]"
        if isinstance(entry, dict):
            entry = [entry.get("state"), entry.get("displacement"), entry.get("rate")]
        if not isinstance(entry, list) or len(entry) != 3:
            raise ValidationError(name, "expected [state, displacement, rate]")
        state, displacement, rate = entry
        if state not in (0, 1) or isinstance(state, bool):
            raise ValidationError(f"{name}.state", f"must be 0 or 1, got {state!r}")
        if isinstance(displacement, int) and not isinstance(displacement, bool):
            displacement = [displacement]
        if not isinstance(displacement, list) or not all(isinstance(v, int) for v in displacement):
            raise ValidationError(f"{name}.displacement", "must be a list of integers")
        if len(displacement) != dimension:
            raise ValidationError(f"{name}.displacement", f"must have {dimension} coordinates")
        if isinstance(rate, bool) or not isinstance(rate, (int, float)) or rate < 0:
            raise ValidationError(f"{name}.rate", f"must be a nonnegative number, got {rate!r}")
        key = (state, tuple(displacement))
        if key in seen:
            raise ValidationError(name, f"duplicate entry for state {state}, displacement {displacement}")
        seen.add(key)
        table.append((state, tuple(displacement), float(rate)))
    return tuple(table)


def _parse_grids(raw: dict) -> Grids:
    unknown = set(raw) - set(GRID_NAMES)
    if unknown:
        raise ValidationError(f"grids.{sorted(unknown)[0]}", "unknown grid")
    values = {}
    for name in GRID_NAMES:
        grid = raw.get(name, [])
        if not isinstance(grid, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in grid
        ):
            raise ValidationError(f"grids.{name}", "expected a list of numbers")
        if name in ("t", "lambda", "T", "K", "epsilon", "m") and any(v <= 0 for v in grid):
            raise ValidationError(f"grids.{name}", "entries must be positive")
        if name == "K" and not all(isinstance(v, int) for v in grid):
            raise ValidationError("grids.K", "entries must be integers")
        if name == "density" and any(not 0 <= v <= 1 for v in grid):
            raise ValidationError("grids.density", "entries must lie in [0, 1]")
        values["lam" if name == "lambda" else name] = tuple(grid)
    if list(values["lam"]) != sorted(values["lam"]):
        raise ValidationError("grids.lambda", "must be sorted ascending")
    return Grids(**values)


def _parse_options(raw: dict) -> dict:
    options = dict(OPTION_DEFAULTS)
    for key, value in raw.items():
        if key not in OPTION_DEFAULTS:
            raise ValidationError(f"options.{key}", "unknown option")
        default = OPTION_DEFAULTS[key]
        if default is not None and isinstance(default, bool) != isinstance(value, bool):
            raise ValidationError(f"options.{key}", f"expected {type(default).__name__}, got {value!r}")
        if isinstance(default, (int, float)) and not isinstance(default, bool):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValidationError(f"options.{key}", f"expected a number, got {value!r}")
        if isinstance(default, str) and not isinstance(value, str):
            raise ValidationError(f"options.{key}", f"expected a string, got {value!r}")
        options[key] = value
    for law in options["initials"]:
        if law not in INITIAL_LAWS:
            raise ValidationError("options.initials", f"unknown initial law {law!r}")
    if options["cone_initial"] not in INITIAL_LAWS:
        raise ValidationError("options.cone_initial", f"unknown initial law {options['cone_initial']!r}")
    if options["reference"] not in (0, 1):
        raise ValidationError("options.reference", "must be 0 or 1")
    if options["observer"] not in ("d1_rightmost", "slab"):
        raise ValidationError("options.observer", "must be 'd1_rightmost' or 'slab'")
    if options["slab_mode"] not in ("independent", "shared"):
        raise ValidationError("options.slab_mode", "must be 'independent' or 'shared'")
    return options


def _parse_environment(raw: dict, grids: Grids, kernel_table: tuple, gamma: float | None) -> EnvSpec:
    prefix = "environment."
    lam = _number(raw, "lambda", prefix, positive=True)
    if lam is None:
        lam = grids.lam[-1] if grids.lam else None
    if lam is None:
        raise ValidationError("environment.lambda", "required (or give grids.lambda)")
    dimension = _integer(raw, "dimension", prefix, 1, minimum=1)
    boundary = raw.get("boundary", "truncate")
    if boundary not in BOUNDARY_MODES:
        raise ValidationError("environment.boundary", f"must be one of {BOUNDARY_MODES}")
    initial = raw.get("initial", "ones")
    if initial not in INITIAL_LAWS:
        raise ValidationError("environment.initial", f"must be one of {INITIAL_LAWS}")
    density = _number(raw, "density", prefix, 0.5, minimum=0.0)
    if density > 1:
        raise ValidationError("environment.density", "must lie in [0, 1]")
    pad = _number(raw, "pad", prefix, DEFAULT_PAD, minimum=0.0)
    burn_in = _number(raw, "burn_in", prefix, 50.0, positive=True)
    transverse = _integer(raw, "transverse_radius", prefix, None, minimum=0)
    max_events = _integer(raw, "max_events", prefix, DEFAULT_MAX_EVENTS, minimum=1)

    window_raw = raw.get("window", "auto")
    window = None if window_raw == "auto" else _integer(raw, "window", prefix, minimum=0)

    radius_raw = raw.get("radius", "auto")
    env = EnvSpec(
        lam=float(lam),
        dimension=dimension,
        radius=None if radius_raw == "auto" else _integer(raw, "radius", prefix, minimum=1),
        radius_auto=radius_raw == "auto",
        boundary=boundary,
        initial=initial,
        density=float(density),
        burn_in=float(burn_in),
        pad=float(pad),
        window=window,
        transverse_radius=transverse,
        max_events=max_events,
    )
    if env.radius_auto:
        horizon = max(grids.t) if grids.t else (max(grids.T) + 1.0 if grids.T else None)
        if horizon is not None:
            if window is None:
                window = walker_window(build_kernel(kernel_table, dimension, gamma=gamma), horizon) if kernel_table else 0
            lam_max = max(grids.lam) if grids.lam else env.lam
            env = replace(env, resolved_window=window, radius=safety_radius(window, lam_max, horizon, pad))
    return env


def parse_config(data: dict, source: str | None = None) -> ExperimentConfig:
    """Validate an already-decoded TOML document."""
    known = {"name", "seed", "replicas", "output_dir", "abort_budget", "confidence",
             "kernel", "environment", "driver", "grids", "options"}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(sorted(unknown)[0], "unknown top-level key")

    name = data.get("name", "experiment")
    if not isinstance(name, str) or not re.fullmatch(r"[A-Za-z0-9_.-]+", name):
        raise ValidationError("name", "must be a non-empty string of letters, digits, '.', '_' or '-'")
    seed = data.get("seed", 0)
    _check_seed(seed)
    replicas = _integer(data, "replicas", "", DEFAULT_REPLICAS, minimum=1)
    abort_budget = _number(data, "abort_budget", "", DEFAULT_ABORT_BUDGET, minimum=0.0)
    if abort_budget > 1:
        raise ValidationError("abort_budget", "must lie in [0, 1]")
    confidence = _number(data, "confidence", "", DEFAULT_CONFIDENCE, positive=True)
    if confidence >= 1:
        raise ValidationError("confidence", "must lie in (0, 1)")

    grids = _parse_grids(data.get("grids", {}))
    env_raw = data.get("environment", {})
    if not isinstance(env_raw, dict):
        raise ValidationError("environment", "expected a table")
    dimension = env_raw.get("dimension", 1)

    kernel_table: tuple = ()
    gamma = None
    if "kernel" in data:
        kernel_table = _parse_kernel(data["kernel"], dimension if isinstance(dimension, int) else 1)
        gamma = _number(data.get("driver", {}), "gamma", "driver.", None, positive=True)
        try:
            build_kernel(kernel_table, dimension, gamma=gamma)
        except SimulationError as exc:
            raise ValidationError("driver.gamma" if gamma is not None else "kernel", str(exc)) from exc

    environment = _parse_environment(env_raw, grids, kernel_table, gamma)
    options = _parse_options(data.get("options", {}))
    output_dir = data.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        raise ValidationError("output_dir", "expected a path string")

    config = ExperimentConfig(
        name=name,
        seed=seed,
        replicas=replicas,
        environment=environment,
        grids=grids,
        kernel_table=kernel_table,
        gamma=gamma,
        output_dir=None if output_dir is None else Path(output_dir),
        abort_budget=float(abort_budget),
        confidence=float(confidence),
        options=options,
        source=source,
    )
    logger.debug("loaded config %s (radius %s)", name, environment.radius)
    return config


_LOCATION = re.compile(r"\(at line (\d+), column (\d+)\)")


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    """Read, parse and validate a TOML experiment file."""
    path = Path(path)
    try:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    except FileNotFoundError as exc:
        raise ParseError("file not found", location=str(path)) from exc
    except tomllib.TOMLDecodeError as exc:
        match = _LOCATION.search(str(exc))
        location = f"{path}:{match.group(1)}:{match.group(2)}" if match else str(path)
        raise ParseError(_LOCATION.sub("", str(exc)).strip(), location=location) from exc
    return parse_config(data, source=str(path))
