import math
from typing import Optional, Sequence, Tuple

import numpy as np

from cs_catoni.influence import InfluenceFn
from cs_catoni.root_finding import bisect_decreasing
from cs_core.config import CsConfig
from cs_core.confidence_set import INF, ConfidenceSet
from cs_core.estimator import StreamingEstimator
from cs_schedules.lambda_schedules import LambdaSchedule


def catoni_map(influence: InfluenceFn, lams: np.ndarray, xs: np.ndarray, m):
    """sum_i phi(lam_i (x_i - m)); m may be a scalar or an array of candidate means."""
    m_arr = np.asarray(m, dtype=float)
    if m_arr.ndim == 0:
        return float(np.sum(influence(lams * (xs - float(m_arr)))))
    return np.sum(influence(lams[None, :] * (xs[None, :] - m_arr[:, None])), axis=1)


def catoni_interval(
        influence: InfluenceFn,
        lams: np.ndarray,
        xs: np.ndarray,
        threshold: float,
        one_sided: bool = False,
        t: Optional[int] = None,
) -> ConfidenceSet:
    """
    {m : -threshold <= sum phi(lam (x - m)) <= threshold}, or [m_lw, inf) when one_sided.

    Endpoints come from bracketed bisection around the lambda-weighted mean.
    """
    sum_lam = float(np.sum(lams))
    center = float(np.sum(lams * xs)) / sum_lam
    half_width = threshold / sum_lam

    def fn(m: float) -> float:
        return catoni_map(influence, lams, xs, m)

    lower = bisect_decreasing(fn, threshold, center, half_width, t=t)
    if one_sided:
        return ConfidenceSet.from_bounds(lower, INF)
    upper = bisect_decreasing(fn, -threshold, center, half_width, t=t)
    return ConfidenceSet.from_bounds(lower, upper)


class CatoniEstimator(StreamingEstimator):
    """
    Catoni-style confidence sequence and its heteroscedastic, p-th moment and one-sided variants.

    Threshold c_t = sum(lam^2 sigma_i^2) / 2 + log(2/alpha) for p = 2,
    c_t = sum(v_i lam^p) / p + log(2/alpha) for p < 2. One-sided mode uses log(1/alpha).
    """
    keeps_history = True

    def __init__(
            self,
            config: CsConfig,
            schedule: Optional[LambdaSchedule] = None,
            influence: Optional[InfluenceFn] = None,
            one_sided: bool = False,
            tighter: bool = False,
            floor_index: int = 9,
    ):
        if schedule is None:
            if config.p == 2.0:
                schedule = LambdaSchedule.catoni_tuned(config.alpha, config.variance_bound, floor_index)
            else:
                schedule = LambdaSchedule.p_catoni_tuned(config.alpha, config.p, config.moment_bound)
        super().__init__(config, schedule)
        self.influence = influence or InfluenceFn(p=config.p)
        self.one_sided = one_sided
        self.tighter = tighter

    def variance_term(self) -> float:
        if self.config.p == 2.0:
            return self.state.sum_lam2_sig2 / 2.0
        return self.state.sum_v_lamp / self.config.p

    def thresholds(self) -> Tuple[float, float]:
        """(two-sided c_t, one-sided c_t)."""
        var = self.variance_term()
        return var + self.config.log_two_over_alpha, var + math.log(1.0 / self.config.alpha)

    def defining_map(self, m):
        lams, xs, _, _ = self.state.history_arrays()
        return catoni_map(self.influence, lams, xs, m)

    def current_set(self) -> ConfidenceSet:
        two_sided, one_sided = self.thresholds()
        lams, xs, _, _ = self.state.history_arrays()
        threshold = one_sided if self.one_sided else two_sided
        return catoni_interval(self.influence, lams, xs, threshold, one_sided=self.one_sided, t=self.t)

    def contains(self, m: float) -> bool:
        if self.tighter:
            return self.tighter_membership(m)
        two_sided, one_sided = self.thresholds()
        value = self.defining_map(m)
        if self.one_sided:
            return value <= one_sided
        return -two_sided <= value <= two_sided

    def tighter_membership(self, m: float) -> bool:
        """
        Membership in the set built from the products prod (1 +- y_i + |y_i|^p / p) exp(-penalty_i).

        y_i = lam_i (x_i - m). The set is contained in the Catoni-style set, but it has no
        monotone defining map, so only membership is offered.
        """
        if self.t == 0:
            return True
        lams, xs, s2s, vs = self.state.history_arrays()
        y = lams * (xs - m)
        power = self.influence.power_term(np.abs(y))
        if self.config.p == 2.0:
            penalty = lams * lams * s2s / 2.0
        else:
            penalty = vs * lams ** self.config.p / self.config.p
        plus = 1.0 + y + power
        minus = 1.0 - y + power
        assert np.all(plus > 0.0) and np.all(minus > 0.0)
        log_alpha = self.config.log_two_over_alpha
        return bool(np.sum(np.log(plus) - penalty) <= log_alpha and np.sum(np.log(minus) - penalty) <= log_alpha)


def catoni_set(est: CatoniEstimator) -> ConfidenceSet:
    return est.current_set()


def tighter_membership(est: CatoniEstimator, m: float) -> bool:
    return est.tighter_membership(m)


def one_sided_test(est: CatoniEstimator, mu0: float) -> bool:
    """Rejects H0: mean <= mu0 once the one-sided lower bound exceeds mu0."""
    return est.current_set().lower > mu0


def width_bound(
        lambdas: Sequence[float],
        sigma2: float,
        alpha: float,
        eps: float,
        sigma2_seq: Optional[Sequence[float]] = None,
) -> Optional[float]:
    """
    High-probability width bound of the Catoni-style set for a nonrandom coefficient prefix.

    Returns 4 K / sum(lam) with K = sigma2 sum(lam^2) + log(2/eps) + log(2/alpha) when
    (sum lam)^2 >= 2 sum(lam^2) K, and None when that condition fails. With sigma2_seq the
    variance term is sum(lam_i^2 sigma_i^2).
    """
    lams = np.asarray(lambdas, dtype=float)
    sum_lam = math.fsum(lams)
    sum_lam2 = math.fsum(lams * lams)
    if sigma2_seq is not None:
        var = math.fsum(lams * lams * np.asarray(sigma2_seq, dtype=float))
    else:
        var = sigma2 * sum_lam2
    k = var + math.log(2.0 / eps) + math.log(2.0 / alpha)
    if sum_lam * sum_lam - 2.0 * sum_lam2 * k < 0.0:
        return None
    return 4.0 * k / sum_lam


if __name__ == '__main__':
    rng = np.random.default_rng(7)
    est = CatoniEstimator(CsConfig(alpha=0.05, sigma2=1.0))
    xs = rng.standard_t(3.0, size=1000) / math.sqrt(3.0)
    lams = est.schedule.lambdas_for(xs)
    for t, cs in est.stream(xs):
        if t in (10, 100, 1000):
            print(t, cs, width_bound(lams[:t], 1.0, 0.05, 0.05))
