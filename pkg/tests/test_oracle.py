"""Tests comparing the compiled sweeps with brute-force path search."""

import numpy as np
import pytest

from app.graphical import Box, Configuration, GraphicalRep, SlabSpec
from app.kernel import build_kernel
from app.oracle import (
    ORACLE_KERNEL,
    SUITES,
    check_dual,
    check_evolve,
    check_rightmost,
    check_truncated,
    check_walk_monotone,
    ordered_pairs,
    random_driver,
    random_instance,
    run_oracle_suites,
)
from app.rng import RngPolicy


@pytest.fixture
def rep():
    box = Box(1, 2)
    return GraphicalRep.from_events(
        box, 1.0, 3.0,
        crosses=[((0,), 1.0), ((2,), 2.5)],
        arrows=[((0,), (1,), 0.5), ((1,), (2,), 1.5), ((2,), (1,), 2.0), ((-1,), (0,), 2.2)],
    )


def test_hand_built_diagram_matches(rep):
    initial = Configuration.from_sites(rep.box, [(0,)])

    assert check_evolve(rep, initial, 0.0, 3.0)
    assert check_evolve(rep, initial, 0.7, 2.1)
    assert check_dual(rep, Configuration.from_sites(rep.box, [(1,)]), 3.0, 3.0)
    assert check_rightmost(rep, Configuration.full(rep.box), 0, 0.5, 3.0)
    assert check_truncated(rep, SlabSpec(1), initial, 3.0)


def test_ordered_pairs_cover_all_orderings():
    pairs = list(ordered_pairs(Box(1, 1)))

    assert len(pairs) == 27
    assert all(lower <= upper for lower, upper in pairs)


def test_random_instances_stay_small():
    stream = np.random.default_rng(0)

    for _ in range(20):
        rep = random_instance(stream, 2, 1, 2.0)
        assert rep.n_events <= 12
        assert rep.box.n_sites == 9


def test_walk_monotone_over_all_pairs():
    kernel = build_kernel(ORACLE_KERNEL, 1)
    stream = np.random.default_rng(4)
    rep = random_instance(stream, 1, 2, 1.0)
    driver = random_driver(stream, kernel.gamma, 1.0)

    passed, total = check_walk_monotone(kernel, rep, driver, safe_radius=2)

    assert total == 3 ** 5
    assert passed == total


@pytest.mark.parametrize("suite", SUITES)
def test_oracle_suites_agree(suite):
    results = run_oracle_suites(RngPolicy(2024, "oracle-test"), instances=40, suites=[suite])

    passed, total = results[suite]
    assert total > 0
    assert passed == total


def test_oracle_suites_are_reproducible():
    policy = RngPolicy(9, "oracle-test")

    assert run_oracle_suites(policy, instances=10) == run_oracle_suites(policy, instances=10)


def test_unknown_suite_rejected():
    with pytest.raises(ValueError):
        run_oracle_suites(RngPolicy(1), suites=["nonsense"])
