"""Tests for labelled streams and the replica fan-out."""

import numpy as np
import pytest

from app.errors import ReplicaAbortBudgetExceeded, SimulationError
from app.replicas import RunContext
from app.rng import ReplicaStreams, RngPolicy, derive_stream, label_scheme, spawn_key


def _draws(params, streams):
    """Replica function: a few uniforms from two roles."""
    return [{
        "replica": streams.index,
        "a": float(streams.get("O").random()),
        "b": float(streams.get("V", params).random()),
    }]


def _odd_fails(params, streams):
    if streams.index % 2:
        raise SimulationError("odd replica")
    return [{"replica": streams.index, "value": 1.0}]


def test_stream_is_pure_function_of_seed_and_labels():
    policy = RngPolicy(42, "exp")

    first = derive_stream(policy, ("exp", 3, "O")).random(5)
    second = derive_stream(policy, ("exp", 3, "O")).random(5)

    assert np.array_equal(first, second)


def test_labels_separate_streams():
    policy = RngPolicy(42, "exp")
    draws = {
        labels: derive_stream(policy, labels).random()
        for labels in [("exp", 3, "O"), ("exp", 3, "V"), ("exp", 4, "O"), ("exp", 3, "O", -1), ("exp", 3, "O", 1)]
    }

    assert len(set(draws.values())) == len(draws)


def test_master_seed_changes_streams():
    labels = ("exp", 0, "rep")

    assert derive_stream(RngPolicy(1), labels).random() != derive_stream(RngPolicy(2), labels).random()


def test_spawn_key_encoding():
    """Three words per label; ints and strings never collide."""
    assert spawn_key([5]) == (1, 5, 0)
    assert spawn_key([-5]) == (2, 5, 0)
    assert spawn_key([2**40]) == (1, 0, 2**8)
    assert spawn_key(["5"])[0] == 3
    assert len(spawn_key(["exp", 7, "O"])) == 9


def test_invalid_labels():
    with pytest.raises(TypeError):
        spawn_key([True])
    with pytest.raises(TypeError):
        spawn_key([1.5])
    with pytest.raises(ValueError):
        spawn_key([2**64])


def test_master_seed_range():
    RngPolicy(2**64 - 1)
    with pytest.raises(ValueError):
        RngPolicy(2**64)
    with pytest.raises(ValueError):
        RngPolicy(-1)


def test_replica_streams_record_labels():
    streams = ReplicaStreams(RngPolicy(3, "exp"), 7)

    streams.get("rep")
    streams.get("rep")
    streams.driver_streams(single=True)
    streams.factory("observer-aux")(-2)

    assert streams.used == [("rep",), ("jumps",), ("O",), ("V",), ("U",), ("observer-aux", -2)]


def test_restart_streams_differ():
    streams = ReplicaStreams(RngPolicy(3, "exp"), 0)

    plain = streams.driver_streams()["O"].random()
    restart = streams.driver_streams(restart=True)["O"].random()

    assert plain != restart


def test_label_scheme_names_seed():
    scheme = label_scheme(RngPolicy(99, "speed"))

    assert scheme["master_seed"] == 99
    assert scheme["experiment"] == "speed"


def test_fan_out_sorted_by_replica():
    ctx = RunContext(RngPolicy(5, "exp"), replicas=6)

    batch = ctx.map(_draws, "x")

    assert [row["replica"] for row in batch.rows] == list(range(6))
    assert batch.column("a").shape == (6,)
    assert ctx.total == 6


def test_results_do_not_depend_on_worker_count():
    serial = RunContext(RngPolicy(5, "exp"), replicas=8, threads=1).map(_draws, "x")
    parallel = RunContext(RngPolicy(5, "exp"), replicas=8, threads=2).map(_draws, "x")

    assert serial.rows == parallel.rows


def test_tags_separate_sub_experiments():
    ctx = RunContext(RngPolicy(5, "exp"), replicas=3)

    main = ctx.map(_draws, "x")
    tagged = ctx.map(_draws, "x", tag="pilot")

    assert main.rows != tagged.rows
    assert tagged.policy.experiment == "exp/pilot"
    assert ctx.total == 6


def test_aborted_replicas_counted():
    ctx = RunContext(RngPolicy(5, "exp"), replicas=4, abort_budget=0.5)

    batch = ctx.map(_odd_fails, None)

    assert [o.index for o in batch.aborted] == [1, 3]
    assert batch.column("value").tolist() == [1.0, 1.0]
    assert ctx.aborted == 2
    assert not ctx.over_budget
    assert ctx.abort_rows()[0] == {"batch": "main", "replica": 1, "error": "SimulationError: odd replica"}


def test_abort_budget_exceeded():
    ctx = RunContext(RngPolicy(5, "exp"), replicas=4, abort_budget=0.25)
    ctx.map(_odd_fails, None)

    assert ctx.over_budget
    with pytest.raises(ReplicaAbortBudgetExceeded) as exc:
        ctx.check_budget()
    assert exc.value.exit_code == 4
