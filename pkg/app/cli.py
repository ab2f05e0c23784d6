"""
Command-line surface: one click command per estimator, registered on `app.cli`.

    cpwalk <subcommand> --config exp.toml [--seed N] [--replicas N] [--out DIR] [--threads N]

Every run writes manifest.json, report.json and replicas.csv and records a
`Run` row.  Exit codes: 0 success, 2 config or usage error, 3 inconclusive
tail fit, 4 replica abort budget exceeded, 1 any other engine error.
"""

from __future__ import annotations

import functools
import logging
import sys
import time
from collections.abc import Callable, Sequence
from pathlib import Path

import click
from flask import Flask, current_app
from flask.cli import with_appcontext
from sqlalchemy.exc import SQLAlchemyError

from .config import OPTION_DEFAULTS, ExperimentConfig, load_config, parse_config
from .database import Run, db, status_for
from .errors import ConfigError, InconclusiveFit, ReplicaAbortBudgetExceeded, SimulationError, ValidationError
from .estimators import (
    EstimatorResult,
    bracket_critical_lambda,
    cluster_growth,
    cone_mixing_phi,
    coupling_discrepancy,
    edge_speed,
    estimate_speed,
    ldp_tail_rho,
    ldp_tail_walker,
    positive_density_lower_bound,
    rho_curve,
    slab_survival,
    slab_width_from_growth,
    subadditive_X,
)
from .estimators.common import environment_box
from .estimators.contact import DEFAULT_SLAB_K
from .graphical import sample_rep
from .oracle import run_oracle_suites
from .outputs import to_jsonable, write_outputs
from .replicas import RunContext
from .rng import ReplicaStreams, RngPolicy

logger = logging.getLogger(__name__)

Estimator = Callable[[ExperimentConfig, RunContext], EstimatorResult]


def _require(values: Sequence, name: str) -> Sequence:
    if not values:
        raise ValidationError(f"grids.{name}", "required by this subcommand")
    return values


def _kernel(config: ExperimentConfig):
    kernel = config.kernel
    if kernel is None:
        raise ValidationError("kernel", "required by this subcommand")
    return kernel


def _lams(config: ExperimentConfig) -> tuple[float, ...]:
    return config.grids.lam or (config.environment.lam,)


def _record(config: ExperimentConfig, subcommand: str, threads: int, exit_code: int, ctx: RunContext | None,
            report: dict | None, output_dir: Path | None, wall: float | None, message: str | None) -> None:
    try:
        db.create_all()
        db.session.add(Run(
            name=config.name,
            subcommand=subcommand,
            seed=str(config.seed),
            replicas=config.replicas,
            threads=threads,
            status=status_for(exit_code),
            exit_code=exit_code,
            aborted=0 if ctx is None else ctx.aborted,
            config=to_jsonable(config.to_dict()),
            report=None if report is None else to_jsonable(report),
            message=message,
            output_dir=None if output_dir is None else str(output_dir),
            wall_seconds=wall,
        ))
        db.session.commit()
    except SQLAlchemyError as exc:
        db.session.rollback()
        logger.warning("could not record run %s: %s", config.name, exc)


def _execute(subcommand: str, config: ExperimentConfig, threads: int | None, estimator: Estimator) -> EstimatorResult:
    threads = threads or current_app.config["CPWALK_THREADS"]
    ctx = RunContext(
        RngPolicy(config.seed, config.name),
        config.replicas,
        threads=threads,
        abort_budget=config.abort_budget,
        confidence=config.confidence,
    )
    logger.info("%s: %s seed=%d replicas=%d threads=%d", subcommand, config.name, config.seed, config.replicas, threads)
    start = time.perf_counter()
    try:
        result = estimator(config, ctx)
    except (SimulationError, ValueError) as exc:
        code = exc.exit_code if isinstance(exc, SimulationError) else ValidationError.exit_code
        _record(config, subcommand, threads, code, ctx, None, None, time.perf_counter() - start, str(exc))
        raise
    wall = time.perf_counter() - start

    error: SimulationError | None = None
    if ctx.over_budget:
        error = ReplicaAbortBudgetExceeded(ctx.aborted, ctx.total, ctx.abort_budget)
    elif result.error:
        error = SimulationError(result.error)
    elif result.inconclusive:
        error = InconclusiveFit("inconclusive tail fits: " + ", ".join(result.inconclusive))
    exit_code = 0 if error is None else error.exit_code

    directory = config.output_path(current_app.config["CPWALK_OUTPUT_ROOT"])
    write_outputs(directory, config, result, ctx, wall, threads, exit_code)
    _record(config, subcommand, threads, exit_code, ctx, result.report, directory,
            wall, None if error is None else str(error))
    for flag in result.flags:
        logger.warning("%s: diagnostic flag %s", subcommand, flag)
    if error is not None:
        raise error
    logger.info("%s finished in %.2fs", subcommand, wall)
    return result


def run_options(require_config: bool = True):
    """Options shared by every estimator subcommand."""

    def decorator(fn):
        @click.option("--config", "config_path", type=click.Path(dir_okay=False), required=require_config,
                      help="TOML experiment file.")
        @click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Master seed override.")
        @click.option("--replicas", type=click.IntRange(min=1), default=None, help="Replica count override.")
        @click.option("--out", "output_dir", type=click.Path(file_okay=False), default=None, help="Output directory.")
        @click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker processes.")
        @functools.wraps(fn)
        def wrapper(config_path, seed, replicas, output_dir, threads, **kwargs):
            # Unset flags arrive as False or None and must not override the file.
            options = {k: v for k, v in kwargs.items() if k in OPTION_DEFAULTS and v not in (None, False)}
            extra = {k: v for k, v in kwargs.items() if k not in OPTION_DEFAULTS}
            try:
                if config_path is None:
                    config = parse_config({"name": fn.__name__.replace("_", "-"), "environment": {"lambda": 1.0}})
                else:
                    config = load_config(config_path)
                config = config.with_overrides(seed=seed, replicas=replicas, output_dir=output_dir, **options)
                fn(config, threads, **extra)
            except SimulationError as exc:
                logger.error("%s: %s", type(exc).__name__, exc)
                raise click.exceptions.Exit(exc.exit_code) from exc
            except ValueError as exc:
                logger.error("invalid input: %s", exc)
                raise click.exceptions.Exit(ConfigError.exit_code) from exc

        return wrapper

    return decorator


@click.command("speed")
@run_options()
@with_appcontext
def speed(config: ExperimentConfig, threads: int | None) -> None:
    """Walker speed v̂(t) and occupation density ρ̂(t)."""
    _execute("speed", config, threads, lambda c, ctx: estimate_speed(
        _kernel(c), c.environment, _require(c.grids.t, "t"), ctx,
        initials=c.option("initials"), single_u=c.option("single_u"),
    ))


@click.command("subadd")
@run_options()
@click.option("--shared-rep", "shared_rep", is_flag=True, default=None, help="Restart on the walker's own rep.")
@with_appcontext
def subadd(config: ExperimentConfig, threads: int | None) -> None:
    """Restarted counts X_{0,t}, X_{t,t+s} with the subadditivity checks."""
    _execute("subadd", config, threads, lambda c, ctx: subadditive_X(
        _kernel(c), c.environment, _require(c.grids.t, "t"), c.option("s"), ctx,
        k_max=c.option("k_max"), shared=c.option("shared_rep"),
    ))


@click.command("ldp-rho")
@run_options()
@with_appcontext
def ldp_rho(config: ExperimentConfig, threads: int | None) -> None:
    """Exponential tails of ρ_t around ρ̂ from 1̄ and from 0̄."""
    _execute("ldp-rho", config, threads, lambda c, ctx: ldp_tail_rho(
        _kernel(c), c.environment, _require(c.grids.epsilon, "epsilon"), _require(c.grids.t, "t"), ctx,
        rho_hat=c.option("rho_hat"), pilot_replicas=c.option("pilot_replicas"),
    ))


@click.command("ldp-walk")
@run_options()
@with_appcontext
def ldp_walk(config: ExperimentConfig, threads: int | None) -> None:
    """Exponential tails of ‖W_t - t·v̂‖_1 per initial law."""
    _execute("ldp-walk", config, threads, lambda c, ctx: ldp_tail_walker(
        _kernel(c), c.environment, _require(c.grids.epsilon, "epsilon"), _require(c.grids.t, "t"), ctx,
        initials=c.option("initials"), rho_hat=c.option("rho_hat"), pilot_replicas=c.option("pilot_replicas"),
    ))


@click.command("coupling")
@run_options()
@with_appcontext
def coupling(config: ExperimentConfig, threads: int | None) -> None:
    """Decay of the discrepancy at o between a Bernoulli start and 1̄."""
    _execute("coupling", config, threads, lambda c, ctx: coupling_discrepancy(
        c.environment, c.environment.density, _require(c.grids.T, "T"), ctx,
    ))


@click.command("conemix")
@run_options()
@click.option("--exact-cone", "exact_cone", is_flag=True, default=None, help="Inspect every inter-event interval.")
@with_appcontext
def conemix(config: ExperimentConfig, threads: int | None) -> None:
    """Cone functional φ̂(T) per slope m."""
    _execute("conemix", config, threads, lambda c, ctx: cone_mixing_phi(
        c.environment, _require(c.grids.m, "m"), _require(c.grids.T, "T"), ctx,
        initial=c.option("cone_initial"), reference=c.option("reference"), tail=c.option("cone_tail"),
        step=c.option("cone_step"), exact=c.option("exact_cone"),
    ))


def _slab_widths(config: ExperimentConfig) -> tuple[int, ...]:
    if config.grids.K:
        return config.grids.K
    a, l = config.option("growth_a"), config.option("growth_l")
    if a is not None and l is not None:
        return (slab_width_from_growth(a, l),)
    return (DEFAULT_SLAB_K,)


@click.command("slab")
@run_options()
@with_appcontext
def slab(config: ExperimentConfig, threads: int | None) -> None:
    """Survival of the slab-truncated process from {o}."""
    _execute("slab", config, threads, lambda c, ctx: slab_survival(
        c.environment, _slab_widths(c), c.grids.L or (0.0,), _lams(c), c.option("t_end"), ctx,
    ))


@click.command("edge")
@run_options()
@with_appcontext
def edge(config: ExperimentConfig, threads: int | None) -> None:
    """Edge speed α̂(λ) of the left-half-line start (d = 1)."""
    env = config.environment
    initial = env.initial if env.initial.endswith("_left") else "ones_left"
    _execute("edge", config, threads, lambda c, ctx: edge_speed(
        c.environment, _lams(c), _require(c.grids.t, "t"), ctx, initial=initial,
    ))


@click.command("rho-curve")
@run_options()
@with_appcontext
def rho_curve_command(config: ExperimentConfig, threads: int | None) -> None:
    """ρ̂(λ) along the λ grid under arrow thinning."""
    _execute("rho-curve", config, threads, lambda c, ctx: rho_curve(
        _kernel(c), c.environment, _require(c.grids.lam, "lambda"), _require(c.grids.t, "t"), ctx,
    ))


@click.command("density-lb")
@run_options()
@with_appcontext
def density_lb(config: ExperimentConfig, threads: int | None) -> None:
    """Observer-scheme lower bound on the occupation density."""
    _execute("density-lb", config, threads, lambda c, ctx: positive_density_lower_bound(
        _kernel(c), c.environment, c.option("observer"), max(_require(c.grids.t, "t")), ctx,
        K=(c.grids.K or _slab_widths(c))[0], L=(c.grids.L or (0.0,))[0], mode=c.option("slab_mode"),
        delta=c.option("delta"), beta=c.option("beta"),
    ))


@click.command("critical")
@run_options()
@with_appcontext
def critical(config: ExperimentConfig, threads: int | None) -> None:
    """Bisection bracket for the critical rate on a finite box."""
    _execute("critical", config, threads, lambda c, ctx: bracket_critical_lambda(
        c.environment, c.option("lo"), c.option("hi"), c.option("t_end"), ctx,
        iterations=c.option("iterations"), threshold=c.option("threshold"),
    ))


@click.command("cluster")
@run_options()
@with_appcontext
def cluster(config: ExperimentConfig, threads: int | None) -> None:
    """Tail of P(|C_t| <= a·t | survival)."""
    _execute("cluster", config, threads, lambda c, ctx: cluster_growth(
        c.environment, c.option("cluster_a"), _require(c.grids.t, "t"), ctx,
    ))


def _oracle(config: ExperimentConfig, ctx: RunContext) -> EstimatorResult:
    results = run_oracle_suites(ctx.policy, instances=config.option("oracle_instances"), kernel=config.kernel)
    rows = [{"suite": suite, "passed": passed, "total": total} for suite, (passed, total) in results.items()]
    for row in rows:
        click.echo(f"{row['suite']}: {row['passed']}/{row['total']}")
    failed = [row["suite"] for row in rows if row["passed"] != row["total"]]
    report = {"suites": {row["suite"]: {"passed": row["passed"], "total": row["total"]} for row in rows}}
    return EstimatorResult(
        "oracle-check", report, ["suite", "passed", "total"], rows,
        error="oracle mismatch in " + ", ".join(failed) if failed else None,
    )


@click.command("oracle-check")
@run_options(require_config=False)
@with_appcontext
def oracle_check(config: ExperimentConfig, threads: int | None) -> None:
    """Compare the sweeps with brute-force path search on small diagrams."""
    _execute("oracle-check", config, threads, _oracle)


@click.command("dump-events")
@run_options()
@click.option("--replica", "replica", type=click.IntRange(min=0), default=0, help="Replica whose rep is dumped.")
@with_appcontext
def dump_events(config: ExperimentConfig, threads: int | None, replica: int = 0) -> None:
    """Write the space-time event list of one replica's rep as events.csv."""
    env = config.environment
    horizon = max(config.grids.t) if config.grids.t else max(_require(config.grids.T, "T")) + 1.0
    streams = ReplicaStreams(RngPolicy(config.seed, config.name), replica)
    box = environment_box(env, horizon, env.resolved_window or 0)
    rep = sample_rep(box, env.lam, horizon, streams.get("rep"), max_events=env.max_events, seed_label="rep")
    directory = config.output_path(current_app.config["CPWALK_OUTPUT_ROOT"])
    directory.mkdir(parents=True, exist_ok=True)
    count = rep.to_csv(directory / "events.csv")
    click.echo(f"{count} events written to {directory / 'events.csv'}")


COMMANDS = (
    speed, subadd, ldp_rho, ldp_walk, coupling, conemix, slab, edge, rho_curve_command,
    density_lb, critical, cluster, oracle_check, dump_events,
)


def register_commands(app: Flask) -> None:
    for command in COMMANDS:
        app.cli.add_command(command)


def run_cli(argv: Sequence[str] | None = None) -> int:
    """Process entry point; returns the exit code instead of exiting."""
    from .app import create_app

    app = create_app()
    args = list(sys.argv[1:] if argv is None else argv)
    with app.app_context():
        try:
            code = app.cli.main(args=args, prog_name="cpwalk", standalone_mode=False)
        except click.UsageError as exc:
            exc.show()
            return ConfigError.exit_code
        except click.ClickException as exc:
            exc.show()
            return exc.exit_code
        except click.Abort:
            return 1
    return code if isinstance(code, int) else 0
