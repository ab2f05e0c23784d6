"""Tests for the restricted observation schemes."""

import numpy as np
import pytest

from app.errors import DimensionMismatch
from app.graphical import Box, Configuration, ContactEnvironment, sample_rep
from app.kernel import build_kernel
from app.observers import FieldObserver, RightmostObserver, SlabField, SlabObserver
from app.walker import WalkDriver, rho_ordered, run_walk, run_walk_general, sample_driver

LEFTWARD_WHEN_OCCUPIED = {(1, (-1,)): 1.0, (0, (1,)): 1.0}
ALWAYS_LEFT_2D = {(1, (-1, 0)): 1.0, (0, (-1, 0)): 1.0}


def _driver(n):
    times = np.arange(1.0, n + 1.0)
    return WalkDriver(1.0, float(n + 1), times, np.full(n, 0.5), np.full(n, 0.5))


def test_rightmost_observer_reads_every_step_left_of_front():
    """On a frozen full line a leftward walker is always behind the front, so τ ≡ 1."""
    kernel = build_kernel(LEFTWARD_WHEN_OCCUPIED, 1)
    env = ContactEnvironment.frozen(Box(1, 10), True)
    observer = RightmostObserver()

    walk = run_walk_general(kernel, env, _driver(5), observer)

    assert walk.bits.tolist() == [1] * 5
    assert walk.positions[:, 0].tolist() == [0, -1, -2, -3, -4, -5]
    assert observer.taus == [1] * 5
    assert observer.fronts == [0, 0, -1, -2, -3]


def test_rightmost_observer_blind_right_of_front():
    """Once ahead of the front the walker sees vacant sites."""
    kernel = build_kernel({(1, (1,)): 1.0, (0, (1,)): 1.0}, 1)
    env = ContactEnvironment.frozen(Box(1, 10), True)
    observer = RightmostObserver()

    walk = run_walk_general(kernel, env, _driver(4), observer)

    assert walk.bits.tolist() == [1, 0, 0, 0]
    assert observer.renewal_times == [1]
    assert observer.fronts == [0, 0, 0, 0]


def test_rightmost_observer_without_particles():
    kernel = build_kernel(LEFTWARD_WHEN_OCCUPIED, 1)
    env = ContactEnvironment.frozen(Box(1, 10), False)
    observer = RightmostObserver()

    walk = run_walk_general(kernel, env, _driver(3), observer)

    assert walk.rho.tolist() == [0, 0, 0, 0]
    assert observer.fronts == [None, None, None]
    assert observer.taus == []


def test_rightmost_observer_needs_one_dimension():
    kernel = build_kernel(ALWAYS_LEFT_2D, 2)
    env = ContactEnvironment.frozen(Box(2, 3), True)

    with pytest.raises(DimensionMismatch):
        run_walk_general(kernel, env, _driver(1), RightmostObserver())


def test_observed_counter_below_full_counter():
    """With the same rep, start and driver the observed ρ never exceeds the full ρ."""
    kernel = build_kernel({(1, (1,)): 2.0, (0, (-1,)): 1.0}, 1)
    box = Box(1, 40)
    rng = np.random.default_rng(11)
    rep = sample_rep(box, 2.0, 5.0, rng)
    driver = sample_driver(kernel.gamma, 5.0, {"jumps": rng, "O": rng, "V": rng})

    full = run_walk(kernel, ContactEnvironment(rep, Configuration.full(box)), driver)
    observed = run_walk_general(
        kernel, ContactEnvironment(rep, Configuration.full(box)), driver, RightmostObserver()
    )

    assert rho_ordered(observed, full)


def test_slab_index_boundaries_go_to_lower_slab():
    field = SlabField(2)

    assert field.slab_index(0.0, 0.0) == 0
    assert field.slab_index(2.0, 0.0) == 0
    assert field.slab_index(3.0, 0.0) == 1
    assert field.slab_index(-2.0, 0.0) == -1
    assert field.slab_index(-6.0, 0.0) == -2


def test_slab_cover_check_follows_moving_slab():
    field = SlabField(2, L=1.0)

    assert field.covers(0, 1.0, 0.0, 1.0)
    assert not field.covers(0, 2.0, -1.0, 0.0)


def test_slab_observer_renews_on_new_left_slab():
    """Slabs of half-width 2: entering x = 0, -2, -6 opens slabs 0, -1, -2."""
    kernel = build_kernel(ALWAYS_LEFT_2D, 2)
    env = ContactEnvironment.frozen(Box(2, 10), True)
    observer = SlabObserver(SlabField(2, mode="shared"))

    walk = run_walk_general(kernel, env, _driver(8), observer)

    assert walk.bits.tolist() == [1, 0, 1, 0, 0, 0, 1, 0]
    assert walk.rho.tolist() == [0, 1, 1, 2, 2, 2, 2, 3, 3]
    assert observer.renewal_times == [1, 3, 7]
    assert observer.taus == [1, 2, 4]
    assert observer.labels == [1, 0, 0, -1, -1, -1, -1, -2]
    assert observer.new_slab_fraction == pytest.approx(3 / 8)


def test_slab_observer_look_back_on_fixed_slabs():
    """With L = 0 the look-back window always lies in the current slab."""
    kernel = build_kernel(ALWAYS_LEFT_2D, 2)
    env = ContactEnvironment.frozen(Box(2, 10), True)
    observer = SlabObserver(SlabField(2, mode="shared"), delta=0.5)

    walk = run_walk_general(kernel, env, _driver(8), observer)

    assert walk.bits.tolist() == [1, 0, 1, 0, 0, 0, 1, 0]
    assert observer.observed_steps == observer.renewal_steps


def test_independent_slab_field_is_reproducible():
    kernel = build_kernel(ALWAYS_LEFT_2D, 2)

    def run():
        field = SlabField(
            2, mode="independent", lam=2.0, horizon=10.0,
            stream_factory=lambda i: np.random.default_rng([5, i + 100]),
        )
        env = ContactEnvironment.frozen(Box(2, 10), True)
        return run_walk_general(kernel, env, _driver(8), FieldObserver(field)), field

    first, field = run()
    second, _ = run()

    assert first.bits.tolist() == second.bits.tolist()
    assert field.slabs_sampled == 3


def test_independent_slab_field_needs_sampling_inputs():
    kernel = build_kernel(ALWAYS_LEFT_2D, 2)
    env = ContactEnvironment.frozen(Box(2, 3), True)

    with pytest.raises(ValueError):
        run_walk_general(kernel, env, _driver(1), SlabObserver(SlabField(2)))


def test_slab_observer_needs_two_dimensions():
    kernel = build_kernel(LEFTWARD_WHEN_OCCUPIED, 1)
    env = ContactEnvironment.frozen(Box(1, 3), True)

    with pytest.raises(DimensionMismatch):
        run_walk_general(kernel, env, _driver(1), SlabObserver(SlabField(2, mode="shared")))


def test_unknown_field_mode():
    with pytest.raises(ValueError):
        SlabField(2, mode="sideways")
