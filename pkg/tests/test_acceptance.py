"""
Monte-Carlo acceptance runs at full scale. They take minutes and are deselected by default;
run them with `pytest -m slow`.
"""
import math

import numpy as np
import pytest

from cs_catoni.catoni_cs import width_bound
from cs_catoni.stitching import stitch_plan, stitched_catoni_set
from cs_core.config import CsConfig
from cs_schedules.lambda_schedules import LambdaSchedule
from cs_simlab.generators import GeneratorSpec, generate
from cs_simlab.harness import run_coverage, run_crossing, run_monitoring, run_width_profile
from cs_simlab.methods import build_method

ALPHA = 0.05
GAUSSIAN = GeneratorSpec(family="gaussian", mean=0.0, variance=1.0, seed=11)
HEAVY = GeneratorSpec(family="student-t", mean=0.0, variance=25.0, df=3.0, seed=12)
PARETO = GeneratorSpec(family="pareto", variance=None, pareto_index=1.8, p=1.5, v=5.0, seed=13)
GROWTH_ALPHAS = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5]


def _band(alpha: float, reps: int) -> float:
    return alpha + 3.0 * math.sqrt(alpha * (1.0 - alpha) / reps)


@pytest.mark.slow
@pytest.mark.parametrize("method_id, config, spec", [
    ("ds", CsConfig(alpha=ALPHA, sigma2=1.0), GAUSSIAN),
    ("sn", CsConfig(alpha=ALPHA, sigma2=1.0), GAUSSIAN),
    ("catoni", CsConfig(alpha=ALPHA, sigma2=25.0), HEAVY),
    ("catoni-stitched", CsConfig(alpha=ALPHA, sigma2=25.0), HEAVY),
    ("p-catoni", CsConfig(alpha=ALPHA, p=1.5, v=5.0), PARETO),
])
def test_time_uniform_coverage(method_id, config, spec):
    report = run_coverage(build_method(method_id, config), spec, horizon=5000, reps=2000, workers=4)
    assert report.summary.iloc[0]["miscoverage"] <= _band(ALPHA, 2000)


@pytest.mark.slow
def test_catoni_width_concentrates_below_its_bound():
    t = 4096
    lams = LambdaSchedule.catoni_tuned(ALPHA, 1.0, 9).lambdas_for(np.zeros(t))
    bound = width_bound(lams, 1.0, ALPHA, ALPHA)
    assert bound is not None
    report = run_width_profile("catoni", CsConfig(alpha=ALPHA, sigma2=1.0), GAUSSIAN, horizon=t, reps=1000,
                               alphas=[ALPHA], workers=4)
    frequency = float((report.per_rep["width"] <= bound).mean())
    assert frequency >= 1.0 - _band(ALPHA, 1000)


@pytest.mark.slow
def test_stitched_width_concentrates_below_the_boundary():
    plan = stitch_plan(ALPHA, 20)
    t = 2 ** 14
    reps = 1000
    hits = 0
    for rep in range(reps):
        result = stitched_catoni_set(plan, generate(GAUSSIAN, t, rep), t, 1.0)
        assert result.boundary is not None
        hits += result.cs.width <= result.boundary
    assert hits / reps >= 1.0 - _band(ALPHA / 3.0, reps)


@pytest.mark.slow
def test_monitored_interval_loses_sequential_coverage():
    chernoff = run_monitoring(build_method("chernoff", CsConfig(alpha=ALPHA, sigma2=1.0)), GAUSSIAN,
                              horizon=10_000, reps=2000, workers=4)
    assert chernoff.summary.iloc[0]["miscoverage"] > 2.0 * ALPHA
    chebyshev = run_monitoring(build_method("chebyshev", CsConfig(alpha=ALPHA, sigma2=1.0)), GAUSSIAN,
                               horizon=10_000, reps=2000, workers=4)
    row = chebyshev.summary.iloc[0]
    assert row["miscoverage"] >= row["final_miscoverage"]


@pytest.mark.slow
def test_trivial_catoni_crosses_later():
    config = CsConfig(alpha=ALPHA, sigma2=25.0)
    spec = GeneratorSpec(family="student-t", mean=1.0, variance=25.0, df=3.0, seed=14)
    report = run_crossing(build_method("trivial-catoni", config), build_method("catoni", config), spec,
                          threshold=0.0, reps=100, horizon=10_000, workers=4)
    row = report.summary.iloc[0]
    assert row["censored_b"] == 0
    assert row["median_a"] / row["median_b"] > 1.5


@pytest.mark.slow
def test_catoni_tracks_pm_hoeffding_on_gaussian_data():
    config = CsConfig(alpha=ALPHA, sigma2=25.0)
    spec = GeneratorSpec(family="gaussian", mean=0.0, variance=25.0, seed=15)
    medians = {}
    for method_id in ("catoni", "pm-hoeffding"):
        report = run_width_profile(method_id, config, spec, horizon=250, reps=50, alphas=[ALPHA])
        medians[method_id] = float(report.summary.iloc[0]["median"])
    assert 0.9 <= medians["catoni"] / medians["pm-hoeffding"] <= 1.15


def test_ds_width_grows_like_inverse_root_alpha():
    report = run_width_profile("ds", CsConfig(alpha=ALPHA, sigma2=25.0), HEAVY, horizon=250, reps=2,
                               alphas=GROWTH_ALPHAS)
    medians = report.summary.set_index("alpha")["median"]
    slope = np.polyfit(np.log(GROWTH_ALPHAS), np.log(medians[GROWTH_ALPHAS].to_numpy()), 1)[0]
    assert slope == pytest.approx(-0.5, rel=0.05)


def test_catoni_width_grows_logarithmically_in_alpha():
    report = run_width_profile("catoni", CsConfig(alpha=ALPHA, sigma2=25.0), HEAVY, horizon=250, reps=20,
                               alphas=GROWTH_ALPHAS)
    medians = report.summary.set_index("alpha")["median"]
    assert medians[1e-5] > medians[1e-1]
    assert medians[1e-5] / medians[1e-1] <= 5.0


@pytest.mark.parametrize("method_id, config, spec", [
    ("sn", CsConfig(alpha=ALPHA, sigma2=1.0), GAUSSIAN),
    ("catoni", CsConfig(alpha=ALPHA, sigma2=25.0), HEAVY),
    ("catoni-stitched", CsConfig(alpha=ALPHA, sigma2=25.0), HEAVY),
    ("trivial-catoni", CsConfig(alpha=ALPHA, sigma2=1.0), GAUSSIAN),
    ("p-catoni", CsConfig(alpha=ALPHA, p=1.5, v=5.0), PARETO),
])
def test_reduced_time_uniform_coverage(method_id, config, spec):
    report = run_coverage(build_method(method_id, config), spec, horizon=1000, reps=200)
    assert report.summary.iloc[0]["miscoverage"] <= _band(ALPHA, 200)
