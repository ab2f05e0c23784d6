"""Small-ensemble tests for the estimators.

Ensembles here are far too small for the estimates to mean anything; the
tests pin down report structure, reproducibility and the pathwise checks
that must hold on every replica.
"""

import math

import pytest

from app.config import EnvSpec
from app.errors import DimensionMismatch, DriftDirectionWarning, InconclusiveFit
from app.estimators import (
    EstimateReport,
    TailFit,
    bracket_critical_lambda,
    cluster_growth,
    cone_mixing_phi,
    coupling_discrepancy,
    edge_speed,
    estimate_speed,
    ldp_tail_rho,
    ldp_tail_walker,
    paired_difference,
    positive_density_lower_bound,
    rho_curve,
    slab_survival,
    slab_width_from_growth,
    subadditive_X,
)
from app.kernel import build_kernel
from app.replicas import RunContext
from app.rng import RngPolicy

DRIFT_KERNEL = {(1, (1,)): 2.0, (0, (-1,)): 1.0}
KERNEL_2D = {(1, (1, 0)): 2.0, (0, (-1, 0)): 1.0, (0, (0, 1)): 0.5, (0, (0, -1)): 0.5}


@pytest.fixture
def kernel():
    return build_kernel(DRIFT_KERNEL, 1)


@pytest.fixture
def env():
    """Line of radius 30 at λ = 2; the radius is fixed so no safety rule applies."""
    return EnvSpec(lam=2.0, radius=30, radius_auto=False, burn_in=2.0)


def _ctx(replicas=10, seed=1, name="test"):
    return RunContext(RngPolicy(seed, name), replicas=replicas)


# -- reports -----------------------------------------------------------------


def test_estimate_from_samples():
    report = EstimateReport.from_samples([1.0, 2.0, 3.0], 0.95, data="x")

    assert report.estimate == 2.0
    assert report.stderr == pytest.approx(1.0 / math.sqrt(3))
    assert report.ci[0] < 2.0 < report.ci[1]
    assert report.to_dict()["data"] == "x"
    assert "wall_seconds" not in report.to_dict()


def test_estimates_agree_within_joint_error():
    base = EstimateReport.from_samples([1.0, 2.0, 3.0])

    assert base.agrees_with(EstimateReport.from_samples([1.5, 2.5, 3.5]))
    assert not base.agrees_with(EstimateReport.from_samples([10.0, 11.0, 12.0]))


def test_estimate_of_nothing_is_nan():
    report = EstimateReport.from_samples([])

    assert report.replicas == 0
    assert math.isnan(report.estimate)


def test_wilson_interval_contains_extremes():
    zero = EstimateReport.from_proportion(0, 20)
    one = EstimateReport.from_proportion(20, 20)

    assert zero.estimate == 0.0 and zero.ci[0] == 0.0 and zero.ci[1] > 0.0
    assert one.estimate == 1.0 and one.ci[1] == 1.0 and one.ci[0] < 1.0


def test_paired_difference_of_equal_samples():
    result = paired_difference([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])

    assert result["difference"]["estimate"] == 0.0
    assert result["difference"]["stderr"] == 0.0
    assert result["agree"] is True


def test_tail_fit_recovers_exponential_rate():
    grid = [1.0, 2.0, 3.0, 4.0, 5.0]
    totals = [100000] * 5
    successes = [round(100000 * math.exp(-0.5 * t)) for t in grid]

    fit = TailFit.from_counts(grid, successes, totals, label="exp")

    assert not fit.inconclusive
    assert fit.slope == pytest.approx(-0.5, abs=1e-3)
    assert fit.r_squared > 0.999
    assert fit.decreasing


def test_tail_fit_drops_zero_cells():
    fit = TailFit.from_counts([1.0, 2.0, 3.0, 4.0, 5.0], [50, 20, 0, 5, 0], [100] * 5, label="sparse")

    assert fit.used == 3
    assert fit.log_probabilities[2] is None
    assert fit.inconclusive
    with pytest.raises(InconclusiveFit):
        fit.require()


def test_tail_fit_all_zero_is_degenerate():
    fit = TailFit.from_counts([1.0, 2.0], [0, 0], [10, 10])

    assert fit.degenerate
    assert math.isnan(fit.slope)


# -- walker estimators -------------------------------------------------------


def test_speed_rows_and_pathwise_order(kernel, env):
    result = estimate_speed(kernel, env, [2.0, 5.0], _ctx(), initials=["ones", "zeros"])

    assert result.subcommand == "speed"
    assert len(result.rows) == 10 * 2 * 2
    ones = result.report["initials"]["ones"]
    zeros = result.report["initials"]["zeros"]
    assert 0.0 <= ones["grid"][-1]["rho"]["estimate"] <= 1.0
    assert zeros["pathwise_below_ones"] == {"checked": 10, "violations": 0}
    assert "stability" in ones
    assert result.report["rho_ones_vs_zeros"]["zeros"] <= result.report["rho_ones_vs_zeros"]["ones"]


def test_speed_is_reproducible(kernel, env):
    first = estimate_speed(kernel, env, [3.0], _ctx(seed=5))
    second = estimate_speed(kernel, env, [3.0], _ctx(seed=5))
    other = estimate_speed(kernel, env, [3.0], _ctx(seed=6))

    assert first.rows == second.rows
    assert first.report == second.report
    assert first.rows != other.rows


def test_speed_single_uniform_variant(kernel, env):
    result = estimate_speed(kernel, env, [3.0], _ctx(), single_u=True)

    assert any(label.endswith(", U)") for label in result.report["streams"])


def test_rho_curve_is_pathwise_monotone(kernel, env):
    result = rho_curve(kernel, env, [0.5, 1.0, 2.0], [4.0], _ctx())

    assert [c["lambda"] for c in result.report["curve"]] == [0.5, 1.0, 2.0]
    assert result.report["pathwise_violations"] == 0
    assert result.flags == []
    assert len(result.report["steps"]) == 2


def test_rho_curve_needs_sorted_grid(kernel, env):
    with pytest.raises(ValueError):
        rho_curve(kernel, env, [2.0, 1.0], [4.0], _ctx())


def test_subadditive_shared_restart(kernel, env):
    result = subadditive_X(kernel, env, [2.0], 2.0, _ctx(), k_max=2, shared=True)

    entry = result.report["grid"][0]
    assert result.report["mode"] == "shared"
    assert entry["subadditive_violations"] == 0
    assert entry["superadditive_violations"] == 0
    assert entry["bound_violations"] == 0
    assert entry["start_nonzero"] == 0
    assert len(entry["stationarity"]["tests"]) == 2
    assert "count_t_2" in result.columns


def test_subadditive_fresh_restart(kernel, env):
    result = subadditive_X(kernel, env, [2.0], 2.0, _ctx(), k_max=2)

    entry = result.report["grid"][0]
    assert result.report["mode"] == "fresh"
    assert entry["subadditive_violations"] is None
    assert any("rep-restart" in label for label in result.report["streams"])


def test_ldp_rho_with_given_centre(kernel, env):
    result = ldp_tail_rho(kernel, env, [0.1], [1.0, 2.0, 3.0, 4.0], _ctx(), rho_hat=0.5)

    assert result.report["centre"] == {"source": "option", "ones": 0.5, "zeros": 0.5}
    assert len(result.report["fits"]) == 1
    fit = result.report["fits"][0]["upper"]
    assert fit["grid"] == [1.0, 2.0, 3.0, 4.0]
    assert all(n == 10 for n in fit["totals"])


def test_ldp_rho_pilot_uses_own_streams(kernel, env):
    ctx = _ctx()
    result = ldp_tail_rho(kernel, env, [0.1], [1.0, 2.0], ctx, pilot_replicas=5)

    assert result.report["centre"]["source"] == "pilot"
    assert [b.tag for b in ctx.batches] == ["pilot", "main"]
    assert ctx.batches[0].replicas == 5
    # Two grid points cannot support either fit.
    assert result.inconclusive == ["upper eps=0.1", "lower eps=0.1"]


def test_ldp_rho_lower_tail_counts_as_inconclusive(kernel, env):
    """Every replica exceeds a negative upper centre; none falls below a zero lower centre."""
    result = ldp_tail_rho(kernel, env, [0.1], [1.0, 2.0, 3.0, 4.0], _ctx(), rho_hat=(-1.0, 0.0))

    fit = result.report["fits"][0]
    assert fit["upper"]["inconclusive"] is False
    assert fit["lower"]["used"] == 0
    assert result.inconclusive == ["lower eps=0.1"]


def test_ldp_walker_per_initial_law(kernel, env):
    result = ldp_tail_walker(kernel, env, [0.5], [1.0, 2.0], _ctx(), initials=["ones", "zeros"], rho_hat=0.5)

    assert result.report["speed"] == [0.5]
    assert [f["initial"] for f in result.report["fits"]] == ["ones", "zeros"]
    assert result.report["rho_check"]["source"] == "option"


# -- contact process estimators ----------------------------------------------


def test_coupling_keeps_order(env):
    result = coupling_discrepancy(env, 0.5, [1.0, 2.0, 3.0, 4.0], _ctx(replicas=20))

    assert result.report["order_violations"] == 0
    assert result.flags == []
    assert len(result.report["probabilities"]) == 4
    assert {row["T"] for row in result.rows} == {1.0, 2.0, 3.0, 4.0}


def test_cone_identical_starts_never_differ(env):
    result = cone_mixing_phi(env, [1.0], [1.0, 2.0], _ctx(), initial="ones", reference=1)

    curve = result.report["curves"][0]
    assert curve["final"] == 0.0
    assert curve["nonincreasing"]
    assert all(row["latest"] == -1.0 for row in result.rows)


def test_cone_exact_mode_reports_mode(env):
    result = cone_mixing_phi(env, [1.0], [1.0, 2.0], _ctx(), initial="zeros", reference=1, exact=True)

    assert result.report["mode"] == "exact"
    assert result.report["horizon"] == 3.0


def test_slab_width_from_growth():
    assert slab_width_from_growth(1.0, 1.0) == 6
    assert slab_width_from_growth(0.5, 0.0) == 3


def test_slab_survival_monotone_in_lambda():
    env = EnvSpec(lam=2.0, dimension=2, transverse_radius=3)

    result = slab_survival(env, [2], [0.0, 0.5], [0.5, 2.0], 2.0, _ctx())

    assert len(result.report["cells"]) == 4
    assert result.report["pathwise_violations"] == 0
    assert result.report["box"]["transverse_radius"] == 3
    assert result.report["box"]["radius"] == 2 + 1 + 1


def test_edge_speed_monotone_in_lambda(env):
    result = edge_speed(env, [1.0, 3.0], [2.0, 4.0], _ctx())

    assert result.report["pathwise_violations"] == 0
    assert [c["lambda"] for c in result.report["curve"]] == [1.0, 3.0]
    assert "stability" in result.report["curve"][0]


def test_edge_speed_needs_left_start(env):
    with pytest.raises(ValueError):
        edge_speed(env, [1.0], [2.0], _ctx(), initial="ones")


def test_edge_speed_needs_one_dimension():
    with pytest.raises(DimensionMismatch):
        edge_speed(EnvSpec(lam=2.0, dimension=2, radius=5, radius_auto=False), [1.0], [2.0], _ctx())


def test_cluster_growth_reports_survival(env):
    result = cluster_growth(env, 0.5, [1.0, 2.0, 3.0, 4.0], _ctx())

    assert len(result.report["survival"]) == 4
    assert len(result.rows) == 40
    assert all(row["size"] >= 0 for row in result.rows)


def test_critical_bracket_narrows():
    env = EnvSpec(lam=4.0, radius=10, radius_auto=False)

    result = bracket_critical_lambda(env, 0.5, 4.0, 2.0, _ctx(), iterations=3)

    lo, hi = result.report["bracket"]
    assert 0.5 <= lo < hi <= 4.0
    assert hi - lo == pytest.approx(3.5 / 8)
    assert [s["iteration"] for s in result.report["steps"]] == [0, 1, 2]
    assert len(result.rows) == 30


def test_critical_bracket_rejects_bad_interval(env):
    with pytest.raises(ValueError):
        bracket_critical_lambda(env, 2.0, 1.0, 2.0, _ctx())


# -- density lower bound -----------------------------------------------------


def test_density_rightmost_observer(kernel, env):
    result = positive_density_lower_bound(kernel, env, "d1_rightmost", 5.0, _ctx())

    assert result.report["initial"] == "upper_invariant_left"
    assert result.report["pathwise_checked"] == 10
    assert result.report["pathwise_violations"] == 0
    assert "beta_split" in result.report
    assert "drift-direction" not in result.flags


def test_density_warns_on_rightward_vacant_drift(env):
    kernel = build_kernel({(1, (1,)): 1.0, (0, (1,)): 1.0}, 1)

    with pytest.warns(DriftDirectionWarning):
        result = positive_density_lower_bound(kernel, env, "d1_rightmost", 3.0, _ctx(replicas=2))

    assert "drift-direction" in result.flags


def test_density_shared_slab_observer():
    kernel = build_kernel(KERNEL_2D, 2)
    env = EnvSpec(lam=2.0, dimension=2, radius=16, radius_auto=False)

    result = positive_density_lower_bound(kernel, env, "slab", 3.0, _ctx(replicas=5), K=2, mode="shared")

    assert result.report["slab"]["mode"] == "shared"
    assert result.report["pathwise_checked"] == 5
    assert result.report["pathwise_violations"] == 0
    assert "new_slab_fraction" in result.report


def test_density_observer_dimension_checks(kernel, env):
    with pytest.raises(DimensionMismatch):
        positive_density_lower_bound(kernel, env, "slab", 3.0, _ctx())
    with pytest.raises(DimensionMismatch):
        positive_density_lower_bound(
            build_kernel(KERNEL_2D, 2), EnvSpec(lam=2.0, dimension=2), "d1_rightmost", 3.0, _ctx()
        )
    with pytest.raises(ValueError):
        positive_density_lower_bound(kernel, env, "telepathic", 3.0, _ctx())
