import math

import numpy as np
import pytest

from cs_baselines.baselines import (
    BaselineEstimator,
    BaselineKind,
    catoni_ci,
    chebyshev_ci,
    chebyshev_half_width,
    chernoff_ci,
    chernoff_half_width,
    normal_mixture_cs,
    normal_mixture_half_width,
    pm_hoeffding_cs,
    stitched_subgaussian_cs,
    stitched_subgaussian_half_width,
    trivial_catoni_cs,
    trivial_catoni_level,
)
from cs_catoni.catoni_cs import CatoniEstimator
from cs_catoni.stitching import stitched_boundary
from cs_core.config import CsConfig, Observation
from cs_core.confidence_set import ConfidenceSet
from cs_core.errors import LevelTooSmallError
from cs_core.stream_state import StreamState


def _bounds(cs: ConfidenceSet):
    return cs.lower, cs.upper


class TestClosedForms:

    def test_chebyshev(self):
        assert _bounds(chebyshev_ci(4, 0.0, 4.0, 0.25)) == pytest.approx((-2.0, 2.0))
        assert _bounds(chebyshev_ci(100, 1.0, 1.0, 0.01)) == pytest.approx((0.0, 2.0))
        assert _bounds(chebyshev_ci(1, 0.0, 1.0, 1.0)) == pytest.approx((-1.0, 1.0))

    def test_chernoff(self):
        assert _bounds(chernoff_ci(2, 0.0, 1.0, 2.0 / math.e ** 2)) == pytest.approx((-math.sqrt(2.0), math.sqrt(2.0)))
        assert _bounds(chernoff_ci(8, 0.0, 1.0, 2.0 / math.e)) == pytest.approx((-0.5, 0.5))
        assert chernoff_half_width(250, 25.0, 0.05) == pytest.approx(5.0 * math.sqrt(2.0 * math.log(40.0) / 250.0))

    def test_normal_mixture(self):
        assert _bounds(normal_mixture_cs(1, 0.5, 1.0, 2.0)) == pytest.approx(
            (0.5 - math.sqrt(2.0 * math.log(2.0)), 0.5 + math.sqrt(2.0 * math.log(2.0))))
        expected = math.sqrt(101.0 * math.log(4.0 * 101.0 / 0.0025)) / 100.0
        assert normal_mixture_half_width(100, 1.0, 0.05) == pytest.approx(expected, rel=1e-12)

    def test_normal_mixture_rate(self):
        t = 10 ** 6
        ratio = normal_mixture_half_width(t, 1.0, 0.05) / math.sqrt(math.log(t) / t)
        assert ratio == pytest.approx(math.sqrt(1.0 + math.log(4.0 / 0.0025) / math.log(t)), rel=1e-3)

    def test_pm_hoeffding(self):
        alpha = 2.0 / math.e
        state = StreamState(CsConfig(alpha=alpha, sigma2=1.0)).update(1.0, Observation(t=1, x=0.0))
        assert _bounds(pm_hoeffding_cs(state, 1.0, alpha)) == pytest.approx((-1.5, 1.5))

    def test_pm_hoeffding_equal_weights_center_on_the_mean(self, gaussian_xs):
        state = StreamState(CsConfig(alpha=0.05, sigma2=1.0))
        for t, x in enumerate(gaussian_xs, start=1):
            state.update(0.2, Observation(t=t, x=float(x)))
        cs = pm_hoeffding_cs(state, 1.0, 0.05)
        assert (cs.lower + cs.upper) / 2.0 == pytest.approx(float(np.mean(gaussian_xs)), abs=1e-12)

    @pytest.mark.parametrize("t", [2, 10, 1024, 10 ** 5])
    @pytest.mark.parametrize("alpha", [0.1, 0.05, 1e-4])
    def test_stitched_envelope_is_a_quarter_of_the_boundary(self, t, alpha):
        assert stitched_subgaussian_half_width(t, alpha) / stitched_boundary(t, alpha) == pytest.approx(0.25)

    def test_stitched_envelope_decreasing(self):
        widths = [stitched_subgaussian_half_width(t, 0.05) for t in range(2, 5000)]
        assert all(a > b for a, b in zip(widths, widths[1:]))

    def test_stitched_envelope_value(self):
        expected = 1.7 * math.sqrt((math.log(math.log(2048.0)) + 0.72 * math.log(208.0)) / 1024.0)
        assert _bounds(stitched_subgaussian_cs(1024, 0.0, 0.05)) == pytest.approx((-expected, expected))

    def test_growth_ordering(self):
        ratios = [chebyshev_half_width(100, 1.0, 10.0 ** -k) / chernoff_half_width(100, 1.0, 10.0 ** -k)
                  for k in range(1, 9)]
        assert all(a < b for a, b in zip(ratios, ratios[1:]))
        assert ratios[-1] > 100.0


class TestFixedTimeCatoni:

    def test_trivial_levels_telescope(self):
        levels = [trivial_catoni_level(t, 0.05) for t in range(1, 10_001)]
        assert levels[0] == pytest.approx(0.025)
        assert math.fsum(levels) == pytest.approx(0.05 * (1.0 - 1.0 / 10_001), rel=1e-12)

    def test_level_too_small(self):
        with pytest.raises(LevelTooSmallError):
            catoni_ci(np.zeros(5), 5, 1.0, 0.05)
        assert not catoni_ci(np.zeros(8), 8, 1.0, 0.05).is_empty

    def test_negation_symmetry(self, gaussian_xs):
        a = catoni_ci(gaussian_xs, 200, 1.0, 0.05)
        b = catoni_ci(-gaussian_xs, 200, 1.0, 0.05)
        assert b.lower == pytest.approx(-a.upper, abs=1e-7)

    def test_trivial_cs_is_wider_than_the_ci(self, gaussian_xs):
        assert trivial_catoni_cs(gaussian_xs, 200, 1.0, 0.05).width > catoni_ci(gaussian_xs, 200, 1.0, 0.05).width

    def test_ci_is_narrower_than_the_sequence(self):
        config = CsConfig(alpha=0.05, sigma2=1.0)
        for seed in range(20):
            xs = np.random.default_rng(seed).standard_normal(250)
            est = CatoniEstimator(config)
            for _, cs in est.stream(xs):
                pass
            assert catoni_ci(xs, 250, 1.0, 0.05).width <= cs.width


class TestStreamingAdapter:

    def test_metadata(self):
        assert BaselineKind.from_id("chebyshev-ci").assumption == "finite-variance"
        assert BaselineKind.CHERNOFF_CI.assumption == "subgaussian"
        assert BaselineKind.NORMAL_MIXTURE_CS.is_sequence
        assert not BaselineKind.CATONI_CI.is_sequence
        with pytest.raises(ValueError):
            BaselineKind.from_id("bernstein")

    def test_full_line_before_the_level_is_defined(self, gaussian_xs):
        est = BaselineEstimator(BaselineKind.TRIVIAL_CATONI_CS, CsConfig(alpha=0.05, sigma2=1.0))
        sets = [cs for _, cs in est.stream(gaussian_xs[:40])]
        assert sets[0] == ConfidenceSet.full_line()
        assert sets[-1].width < math.inf

    @pytest.mark.parametrize("kind", list(BaselineKind))
    def test_adapter_matches_pure_functions(self, kind, gaussian_xs):
        config = CsConfig(alpha=0.05, sigma2=2.0)
        est = BaselineEstimator(kind, config)
        for _, cs in est.stream(gaussian_xs[:60]):
            pass
        mean_hat = float(np.mean(gaussian_xs[:60]))
        expected = {
            BaselineKind.CHEBYSHEV_CI: lambda: chebyshev_ci(60, mean_hat, 2.0, 0.05),
            BaselineKind.CHERNOFF_CI: lambda: chernoff_ci(60, mean_hat, 2.0, 0.05),
            BaselineKind.NORMAL_MIXTURE_CS: lambda: normal_mixture_cs(60, mean_hat, 2.0, 0.05),
            BaselineKind.PM_HOEFFDING_CS: lambda: pm_hoeffding_cs(est.state, 2.0, 0.05),
            BaselineKind.STITCHED_SUBGAUSSIAN_CS: lambda: stitched_subgaussian_cs(60, mean_hat, 0.05, math.sqrt(2.0)),
            BaselineKind.TRIVIAL_CATONI_CS: lambda: trivial_catoni_cs(gaussian_xs, 60, 2.0, 0.05),
            BaselineKind.CATONI_CI: lambda: catoni_ci(gaussian_xs, 60, 2.0, 0.05),
        }[kind]()
        assert cs.lower == pytest.approx(expected.lower, abs=1e-9)
        assert cs.upper == pytest.approx(expected.upper, abs=1e-9)
