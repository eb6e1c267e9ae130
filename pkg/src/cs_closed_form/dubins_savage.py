"""
Dubins-Savage confidence sequence.

    C_t = [ sum(lam X) / sum(lam)  +-  (2/alpha - 1 + sum(lam^2 sigma_i^2)) / sum(lam) ]

With sigma_i constant the variance term is sigma^2 sum(lam^2). If the conditional means drift,
the same interval tracks the lambda-weighted average sum(lam mu_i) / sum(lam) instead of a
single mean; no separate code path is needed for that reading.
"""
import math
from typing import Optional

import numpy as np

from cs_core.config import CsConfig, Observation
from cs_core.confidence_set import ConfidenceSet
from cs_core.estimator import StreamingEstimator
from cs_core.stream_state import StreamState
from cs_schedules.lambda_schedules import LambdaSchedule


def ds_interval(state: StreamState, alpha: float) -> ConfidenceSet:
    center = state.weighted_mean
    half = (2.0 / alpha - 1.0 + state.sum_lam2_sig2) / state.sum_lam
    return ConfidenceSet.from_bounds(center - half, center + half)


def ds_closed_form_half_width(t: int, alpha: float, sigma2: float) -> float:
    """Half-width under the tuned schedule: sqrt(2/alpha - 1) sigma (1 + H_t) / sum_{i<=t} i^{-1/2}."""
    i = np.arange(1, t + 1, dtype=float)
    harmonic = math.fsum(1.0 / i)
    root_sum = math.fsum(1.0 / np.sqrt(i))
    return math.sqrt(2.0 / alpha - 1.0) * math.sqrt(sigma2) * (1.0 + harmonic) / root_sum


class DsEstimator(StreamingEstimator):
    needs_sigma = True

    def __init__(self, config: CsConfig, schedule: Optional[LambdaSchedule] = None):
        if schedule is None:
            schedule = LambdaSchedule.ds_tuned(config.alpha, config.variance_bound)
        super().__init__(config, schedule)

    def current_set(self) -> ConfidenceSet:
        return ds_interval(self.state, self.config.alpha)


def ds_step(est: DsEstimator, obs: Observation) -> ConfidenceSet:
    return est.step(obs)


if __name__ == '__main__':
    rng = np.random.default_rng(7)
    est = DsEstimator(CsConfig(alpha=0.05, sigma2=1.0))
    for t, cs in est.stream(rng.standard_t(3.0, size=1000) / math.sqrt(3.0)):
        if t in (10, 100, 1000):
            print(t, cs, ds_closed_form_half_width(t, 0.05, 1.0))
