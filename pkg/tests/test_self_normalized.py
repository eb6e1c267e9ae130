import math

import numpy as np
import pytest

from cs_closed_form.self_normalized import (
    SnEstimator,
    middle_width,
    quadratic_sublevel,
    sn_anti_intervals,
    sn_middle_width,
    sn_quadratics,
    sn_step,
)
from cs_core.config import CsConfig, Observation
from cs_core.confidence_set import INF, ConfidenceSet, Interval
from cs_core.errors import PredictabilityError, SequencingError
from cs_schedules.lambda_schedules import LambdaSchedule


def _single_zero(sigma2: float) -> SnEstimator:
    est = SnEstimator(CsConfig(alpha=0.05, sigma2=sigma2), LambdaSchedule.constant(1.0))
    sn_step(est, Observation(t=1, x=0.0))
    return est


def test_first_step_has_no_anti_intervals():
    est = _single_zero(1.0)
    plus, minus = sn_anti_intervals(est)
    assert plus.is_empty and minus.is_empty
    assert est.current_set() == ConfidenceSet.full_line()
    assert sn_middle_width(est) == INF


def test_quadratic_sublevel():
    assert quadratic_sublevel(1.0, 0.0, -1.0) == ConfidenceSet.from_bounds(-1.0, 1.0)
    assert quadratic_sublevel(1.0, -5.0, 6.0) == ConfidenceSet.from_bounds(2.0, 3.0)
    assert quadratic_sublevel(1.0, 0.0, 1.0).is_empty


def test_anti_interval_endpoints_are_roots(rng):
    est = SnEstimator(CsConfig(alpha=0.05, sigma2=1.0), LambdaSchedule.capped_inv_sqrt(1.0))
    for t, x in enumerate(rng.standard_normal(200) + 0.7, start=1):
        est.step(Observation(t=t, x=float(x)))
    found = 0
    for (a, b, c), anti in zip(sn_quadratics(est.state, est.sn_alpha), est.anti_intervals()):
        for iv in anti.intervals:
            for m in (iv.lo, iv.hi):
                found += 1
                scale = a * m * m + abs(b * m) + abs(c)
                assert abs(a * m * m + b * m + c) < 1e-9 * (1.0 + abs(m)) * max(1.0, scale)
    assert found == 4


def test_large_variance_removes_anti_intervals():
    est = SnEstimator(CsConfig(alpha=0.05, sigma2=1e6), LambdaSchedule.constant(0.5))
    for t, x in enumerate([0.3, -1.2, 2.0, 0.1], start=1):
        est.step(Observation(t=t, x=x))
    assert all(anti.is_empty for anti in est.anti_intervals())


def test_middle_width_of_three_pieces():
    cs = ConfidenceSet([Interval(-INF, -3), Interval(-1, 1), Interval(3, INF)])
    assert middle_width(cs) == 2
    assert middle_width(ConfidenceSet.full_line()) == INF


def test_three_piece_topology_dominates():
    hits = total = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        est = SnEstimator(CsConfig(alpha=0.05, sigma2=1.0), LambdaSchedule.capped_inv_sqrt(1.0))
        for t, x in enumerate(rng.standard_normal(100), start=1):
            est.step(Observation(t=t, x=float(x)))
            if t >= 30:
                total += 1
                hits += est.topology() == "three-piece"
    assert hits / total > 0.5


def test_tuned_middle_width_is_narrow():
    rng = np.random.default_rng(7)
    est = SnEstimator(CsConfig(alpha=0.05, sigma2=1.0))
    for t, x in enumerate(rng.standard_normal(10_000), start=1):
        est.step(Observation(t=t, x=float(x)))
    width = est.middle_width()
    assert math.isfinite(width)
    assert width < 1.0


def test_translation_equivariance_with_data_free_schedule(gaussian_xs):
    config = CsConfig(alpha=0.05, sigma2=1.0)
    schedule = LambdaSchedule.capped_inv_sqrt(0.5)
    plain = [cs for _, cs in SnEstimator(config, schedule).stream(gaussian_xs)]
    shifted = [cs for _, cs in SnEstimator(config, schedule).stream(gaussian_xs + 4.0)]
    for a, b in zip(plain, shifted):
        assert len(a.intervals) == len(b.intervals)
        for iv_a, iv_b in zip(a.intervals, b.intervals):
            for x, y in ((iv_a.lo, iv_b.lo), (iv_a.hi, iv_b.hi)):
                if math.isinf(x):
                    assert x == y
                else:
                    assert y == pytest.approx(x + 4.0, abs=1e-6)


def test_companion_removes_outer_pieces(gaussian_xs):
    config = CsConfig(alpha=0.05, sigma2=1.0).with_default_split()
    est = SnEstimator(config)
    assert est.sn_alpha == pytest.approx(0.045)
    assert est.companion is not None
    for _, cs in est.stream(gaussian_xs):
        assert cs.width < INF
        assert cs == (est.raw_set() & est.companion.current_set())


def test_rejected_rows_leave_both_states_untouched(gaussian_xs):
    config = CsConfig(alpha=0.05, sigma2=1.0, heteroscedastic=True).with_default_split()
    est = SnEstimator(config, LambdaSchedule.constant(0.2), LambdaSchedule.constant(0.2))
    est.step(Observation(t=1, x=float(gaussian_xs[0]), sigma_t=1.0))
    with pytest.raises(SequencingError):
        est.step(Observation(t=3, x=0.0, sigma_t=1.0))
    with pytest.raises(PredictabilityError):
        est.step(Observation(t=2, x=0.0))
    assert est.t == 1
    assert est.companion.t == 1
    cs = est.step(Observation(t=2, x=float(gaussian_xs[1]), sigma_t=1.0))
    assert est.companion.t == 2
    assert cs == (est.raw_set() & est.companion.current_set())
