import math

import numpy as np
import pytest

from cs_core.config import CsConfig
from cs_core.errors import ConfigError, ReplicationError, RootFindingError, ScheduleError
from cs_simlab.generators import GeneratorSpec, generate_with_bounds
from cs_simlab.harness import (
    gaussian_lower_reference,
    lil_reference,
    run_coverage,
    run_crossing,
    run_monitoring,
    run_shrinkage,
    run_width_profile,
)
from cs_simlab.methods import METHOD_IDS, DsMethod, build_method

UNIT = CsConfig(alpha=0.05, sigma2=1.0)


def test_ds_coverage_small_run():
    report = run_coverage(build_method("ds", UNIT), GeneratorSpec(seed=1), horizon=500, reps=100)
    row = report.summary.iloc[0]
    assert row["reps"] == 100
    assert row["miscoverage"] <= row["band_upper"]
    assert bool(row["within_band"])
    assert len(report.per_rep) == 100
    assert report.seed == 1


@pytest.mark.parametrize("method_id", ["ds", "sn", "catoni", "catoni-stitched", "catoni-onesided", "chebyshev",
                                       "pm-hoeffding", "nmix", "trivial-catoni", "catoni-ci"])
def test_constant_stream_is_always_covered(method_id):
    spec = GeneratorSpec(mean=3.0, variance=0.0, seed=2)
    report = run_coverage(build_method(method_id, UNIT), spec, horizon=60, reps=3)
    assert report.summary.iloc[0]["misses"] == 0


def test_parallel_and_serial_runs_agree():
    method = build_method("catoni", UNIT)
    spec = GeneratorSpec(family="student-t", mean=0.5, variance=1.0, seed=8)
    serial = run_coverage(method, spec, horizon=200, reps=6, workers=1)
    parallel = run_coverage(method, spec, horizon=200, reps=6, workers=2)
    assert serial.per_rep.equals(parallel.per_rep)


def test_fast_paths_match_streaming():
    spec = GeneratorSpec(family="student-t", mean=0.0, variance=1.0, seed=5)
    xs, sigmas = generate_with_bounds(spec, 300)
    for method_id in METHOD_IDS:
        config = CsConfig(alpha=0.05, p=1.5, v=5.0) if method_id == "p-catoni" else UNIT
        method = build_method(method_id, config)
        sets = method.stream(xs)
        mu = 0.05
        expected = np.array([cs.contains(mu) for cs in sets])
        np.testing.assert_array_equal(method.covers(xs, mu), expected, err_msg=method_id)
        crossing = next((t for t, cs in enumerate(sets, start=1) if cs.lower > -0.5), None)
        assert method.crossing_time(xs, -0.5) == crossing, method_id


def test_sets_at_matches_streaming():
    spec = GeneratorSpec(seed=6)
    xs, _ = generate_with_bounds(spec, 128)
    for method_id in ("catoni", "catoni-stitched", "catoni-ci", "trivial-catoni"):
        method = build_method(method_id, UNIT)
        streamed = method.stream(xs)
        for t, cs in method.sets_at(xs, [16, 100, 128]).items():
            assert cs.lower == pytest.approx(streamed[t - 1].lower, abs=1e-7), method_id
            assert cs.upper == pytest.approx(streamed[t - 1].upper, abs=1e-7), method_id


def test_intersected_coverage_is_monotone():
    method = build_method("ds", CsConfig(alpha=0.05, sigma2=1.0, intersect=True))
    xs, _ = generate_with_bounds(GeneratorSpec(seed=3), 400)
    covered = method.covers(xs, 0.0)
    assert np.all(np.diff(covered.astype(int)) <= 0)


def test_ds_width_is_replication_constant():
    report = run_width_profile("ds", UNIT, GeneratorSpec(seed=4), horizon=250, reps=5, alphas=[0.05], ts=[50, 250])
    spread = report.per_rep.groupby("t")["width"].agg(lambda w: w.max() - w.min())
    assert (spread < 1e-9).all()


def test_ds_width_scales_with_alpha():
    report = run_width_profile("ds", UNIT, GeneratorSpec(seed=4), horizon=250, reps=2, alphas=[0.1, 0.01])
    medians = report.summary.set_index("alpha")["median"]
    assert medians[0.01] / medians[0.1] == pytest.approx(math.sqrt(199.0 / 19.0), rel=1e-9)


def test_sn_profile_reports_topology():
    report = run_width_profile("sn", UNIT, GeneratorSpec(seed=4), horizon=200, reps=3, alphas=[0.05], ts=[100, 200])
    assert {"three_piece_share", "middle_median"} <= set(report.summary.columns)
    assert set(report.per_rep["t"]) == {100, 200}


def test_profile_rejects_times_past_horizon():
    with pytest.raises(ConfigError):
        run_width_profile("ds", UNIT, GeneratorSpec(seed=4), horizon=100, reps=1, alphas=[0.05], ts=[200])


def test_shrinkage_has_one_block_per_method():
    report = run_shrinkage(["ds", "catoni"], UNIT, GeneratorSpec(seed=5), horizon=400, reps=2, ts=[100, 400])
    assert set(report.summary["method"]) == {"ds", "catoni"}
    widths = report.summary.set_index(["method", "t"])["median"]
    assert widths[("catoni", 400)] < widths[("catoni", 100)]


def test_identical_methods_cross_together():
    method = build_method("catoni", UNIT)
    report = run_crossing(method, method, GeneratorSpec(mean=1.0, seed=9), threshold=0.0, reps=10, horizon=500)
    assert report.summary.iloc[0]["ratio"] == 1.0
    assert report.summary.iloc[0]["censored_a"] == 0


def test_unreachable_threshold_is_censored():
    method = build_method("ds", UNIT)
    report = run_crossing(method, method, GeneratorSpec(mean=1.0, seed=9), threshold=100.0, reps=4, horizon=200)
    row = report.summary.iloc[0]
    assert row["censored_a"] == 4
    assert row["median_a"] == math.inf
    assert math.isnan(row["ratio"])


def test_crossing_needs_matching_levels():
    with pytest.raises(ConfigError):
        run_crossing(build_method("ds", UNIT), build_method("ds", CsConfig(alpha=0.1, sigma2=1.0)), GeneratorSpec())


class _FailingMethod(DsMethod):

    def membership_mask(self, xs, mu, sigmas=None):
        raise ScheduleError("broken schedule")


def test_estimator_errors_are_tagged_with_the_replication():
    with pytest.raises(ReplicationError) as info:
        run_coverage(_FailingMethod("ds", UNIT), GeneratorSpec(seed=1), horizon=10, reps=2)
    assert info.value.rep == 0


class _DivergingMethod(DsMethod):

    def membership_mask(self, xs, mu, sigmas=None):
        raise RootFindingError("upper bracket expansion failed", {"t": 7})


def test_root_finding_errors_carry_their_time():
    with pytest.raises(ReplicationError) as info:
        run_coverage(_DivergingMethod("ds", UNIT), GeneratorSpec(seed=1), horizon=10, reps=1)
    assert info.value.rep == 0
    assert info.value.t == 7


def test_monitoring_reports_its_kind():
    report = run_monitoring(build_method("chebyshev", UNIT), GeneratorSpec(seed=1), horizon=100, reps=10)
    assert report.kind == "monitoring"
    row = report.summary.iloc[0]
    assert row["miscoverage"] >= row["final_miscoverage"]


def test_lil_reference():
    assert lil_reference(math.exp(math.e), 1.0) == pytest.approx(math.sqrt(2.0 / math.exp(math.e)))
    values = [lil_reference(t, 1.0) for t in range(16, 2000)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert lil_reference(1e4, 5.0) == pytest.approx(5.0 * math.sqrt(2.0 * math.log(math.log(1e4)) / 1e4))
    with pytest.raises(ConfigError):
        lil_reference(2, 1.0)


def test_gaussian_lower_reference():
    from scipy.stats import norm
    assert gaussian_lower_reference(100, 1.0, 0.05, 0.05) == pytest.approx(0.2 * norm.ppf(0.925))
    with pytest.raises(ConfigError):
        gaussian_lower_reference(100, 1.0, 0.5, 0.3)


def test_trivial_catoni_coverage_stays_below_alpha():
    report = run_coverage(build_method("trivial-catoni", UNIT), GeneratorSpec(mean=0.0, seed=21), horizon=500, reps=200)
    assert report.summary.iloc[0]["miscoverage"] <= UNIT.alpha
