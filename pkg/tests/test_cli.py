"""Tests for the estimator subcommands and their run outputs."""

import csv
import json
import os
from unittest.mock import patch

import pytest

from app import create_app
from app.cli import COMMANDS, run_cli
from app.database import Run, db
from app.oracle import SUITES

SPEED = """
name = "cli_speed"
seed = 11
replicas = 4
kernel = [[1, [1], 2.0], [0, [-1], 1.0]]

[environment]
lambda = 2.0

[grids]
t = [1.0, 2.0]

[options]
initials = ["ones", "zeros"]
"""

LDP_RHO = """
name = "cli_ldp"
seed = 5
replicas = 4
kernel = [[1, [1], 2.0], [0, [-1], 1.0]]

[environment]
lambda = 2.0

[grids]
t = [1.0, 2.0]
epsilon = [0.1]

[options]
initials = ["ones", "zeros"]
rho_hat = 0.5
"""

NO_GRID = """
name = "cli_no_grid"
kernel = [[1, [1], 2.0], [0, [-1], 1.0]]

[environment]
lambda = 2.0
"""

ORACLE = """
name = "cli_oracle"
seed = 3

[environment]
lambda = 1.0

[options]
oracle_instances = 5
"""

EVENTS = """
name = "cli_events"
seed = 2

[environment]
lambda = 1.0
radius = 3

[grids]
t = [1.0]
"""


@pytest.fixture
def app(tmp_path):
    app = create_app({
        "TESTING": True,
        "SQLALCHEMY_DATABASE_URI": "sqlite:///:memory:",
        "CPWALK_OUTPUT_ROOT": str(tmp_path / "runs"),
    })
    with app.app_context():
        db.create_all()
        yield app
        db.drop_all()


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


def _write(tmp_path, text, name="experiment.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def _runs():
    return db.session.execute(db.select(Run).order_by(Run.id)).scalars().all()


def test_all_subcommands_registered(app):
    names = set(app.cli.commands)

    assert {command.name for command in COMMANDS} <= names
    assert {"speed", "ldp-rho", "ldp-walk", "rho-curve", "density-lb", "oracle-check", "dump-events"} <= names
    assert "init-db" in names


def test_speed_writes_outputs(runner, tmp_path):
    """A successful run leaves manifest, report and per-replica rows on disk."""
    result = runner.invoke(args=["speed", "--config", _write(tmp_path, SPEED)])

    assert result.exit_code == 0, result.output
    directory = tmp_path / "runs" / "cli_speed"
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    report = json.loads((directory / "report.json").read_text(encoding="utf-8"))
    with open(directory / "replicas.csv", newline="", encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))

    assert manifest["master_seed"] == 11
    assert manifest["exit_code"] == 0
    assert manifest["aborted"] == 0
    assert manifest["config"]["name"] == "cli_speed"
    assert "wall_seconds" not in report
    assert report["subcommand"] == "speed"
    assert set(report["report"]["initials"]) == {"ones", "zeros"}
    assert len(rows) == 4 * 2 * 2
    assert {row["initial"] for row in rows} == {"ones", "zeros"}
    assert all(row["error"] == "" for row in rows)


def test_speed_run_is_recorded(runner, tmp_path):
    runner.invoke(args=["speed", "--config", _write(tmp_path, SPEED)])

    runs = _runs()
    assert len(runs) == 1
    assert runs[0].subcommand == "speed"
    assert runs[0].status == "ok"
    assert runs[0].seed == "11"
    assert runs[0].output_dir == str(tmp_path / "runs" / "cli_speed")
    assert runs[0].report["initials"]["ones"]["pathwise_below_ones"]["violations"] == 0


def test_seed_and_output_overrides(runner, tmp_path):
    out = tmp_path / "elsewhere"

    result = runner.invoke(args=[
        "speed", "--config", _write(tmp_path, SPEED), "--seed", "99", "--replicas", "2", "--out", str(out),
    ])

    assert result.exit_code == 0, result.output
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["master_seed"] == 99
    assert manifest["config"]["replicas"] == 2
    assert not (tmp_path / "runs" / "cli_speed").exists()


def test_report_does_not_depend_on_worker_count(runner, tmp_path):
    """Same config and seed: byte-identical report.json with one or two worker processes."""
    path = _write(tmp_path, SPEED)
    serial, parallel = tmp_path / "serial", tmp_path / "parallel"

    first = runner.invoke(args=["speed", "--config", path, "--threads", "1", "--out", str(serial)])
    second = runner.invoke(args=["speed", "--config", path, "--threads", "2", "--out", str(parallel)])

    assert first.exit_code == 0, first.output
    assert second.exit_code == 0, second.output
    assert (serial / "report.json").read_bytes() == (parallel / "report.json").read_bytes()
    assert (serial / "replicas.csv").read_bytes() == (parallel / "replicas.csv").read_bytes()
    assert [run.threads for run in _runs()] == [1, 2]


def test_missing_config_file(runner, tmp_path):
    result = runner.invoke(args=["speed", "--config", str(tmp_path / "absent.toml")])

    assert result.exit_code == 2
    assert _runs() == []


def test_invalid_config(runner, tmp_path):
    text = SPEED.replace("replicas = 4", "replicas = 0")

    result = runner.invoke(args=["speed", "--config", _write(tmp_path, text)])

    assert result.exit_code == 2


def test_missing_grid_is_recorded_as_failure(runner, tmp_path):
    result = runner.invoke(args=["speed", "--config", _write(tmp_path, NO_GRID)])

    assert result.exit_code == 2
    runs = _runs()
    assert len(runs) == 1
    assert runs[0].status == "failed"
    assert runs[0].exit_code == 2
    assert "grids.t" in runs[0].message


def test_missing_kernel(runner, tmp_path):
    text = SPEED.replace("kernel = [[1, [1], 2.0], [0, [-1], 1.0]]\n", "")

    result = runner.invoke(args=["speed", "--config", _write(tmp_path, text)])

    assert result.exit_code == 2


def test_inconclusive_fit_exit_code(runner, tmp_path):
    """Two grid points cannot carry a tail fit: exit 3, outputs still written."""
    result = runner.invoke(args=["ldp-rho", "--config", _write(tmp_path, LDP_RHO)])

    assert result.exit_code == 3
    directory = tmp_path / "runs" / "cli_ldp"
    report = json.loads((directory / "report.json").read_text(encoding="utf-8"))
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    assert report["inconclusive"] == ["upper eps=0.1", "lower eps=0.1"]
    assert manifest["exit_code"] == 3
    assert _runs()[0].status == "inconclusive"


def test_oracle_check_prints_suites(runner, tmp_path):
    result = runner.invoke(args=["oracle-check", "--config", _write(tmp_path, ORACLE)])

    assert result.exit_code == 0, result.output
    for suite in SUITES:
        assert f"{suite}: " in result.output
    report = json.loads((tmp_path / "runs" / "cli_oracle" / "report.json").read_text(encoding="utf-8"))
    assert set(report["report"]["suites"]) == set(SUITES)
    assert all(s["passed"] == s["total"] for s in report["report"]["suites"].values())


def test_dump_events_writes_csv(runner, tmp_path):
    result = runner.invoke(args=["dump-events", "--config", _write(tmp_path, EVENTS)])

    assert result.exit_code == 0, result.output
    path = tmp_path / "runs" / "cli_events" / "events.csv"
    with open(path, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["kind", "site", "edge", "time"]
    assert {row[0] for row in rows[1:]} <= {"arrow", "cross"}
    assert f"{len(rows) - 1} events written" in result.output


def test_dump_events_is_reproducible(runner, tmp_path):
    path = _write(tmp_path, EVENTS)

    runner.invoke(args=["dump-events", "--config", path, "--out", str(tmp_path / "a")])
    runner.invoke(args=["dump-events", "--config", path, "--out", str(tmp_path / "b")])

    assert (tmp_path / "a" / "events.csv").read_bytes() == (tmp_path / "b" / "events.csv").read_bytes()


def test_run_cli_returns_exit_codes(tmp_path):
    """The process entry point maps usage and config errors to exit code 2."""
    env = {"DATABASE_URL": "sqlite:///:memory:", "CPWALK_OUTPUT_ROOT": str(tmp_path)}
    with patch.dict(os.environ, env):
        assert run_cli(["speed", "--config", str(tmp_path / "absent.toml")]) == 2
        assert run_cli(["no-such-command"]) == 2
        assert run_cli(["speed"]) == 2
