import math
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from cs_catoni.catoni_cs import catoni_interval
from cs_catoni.influence import CATONI
from cs_core.config import CsConfig
from cs_core.confidence_set import ConfidenceSet
from cs_core.errors import LevelTooSmallError
from cs_core.estimator import StreamingEstimator
from cs_core.stream_state import StreamState
from cs_schedules.lambda_schedules import LambdaSchedule, catoni_lambda


class BaselineKind(Enum):
    # value: (method id, assumption class, is a confidence sequence)
    CHEBYSHEV_CI = ("chebyshev-ci", "finite-variance", False)
    CHERNOFF_CI = ("chernoff-ci", "subgaussian", False)
    NORMAL_MIXTURE_CS = ("normal-mixture-cs", "subgaussian", True)
    PM_HOEFFDING_CS = ("pm-hoeffding-cs", "subgaussian", True)
    STITCHED_SUBGAUSSIAN_CS = ("stitched-subgaussian-cs", "subgaussian", True)
    TRIVIAL_CATONI_CS = ("trivial-catoni-cs", "finite-variance", True)
    CATONI_CI = ("catoni-ci", "finite-variance", False)

    @property
    def id(self) -> str:
        return self.value[0]

    @property
    def assumption(self) -> str:
        return self.value[1]

    @property
    def is_sequence(self) -> bool:
        return self.value[2]

    @classmethod
    def from_id(cls, kind_id: str) -> "BaselineKind":
        for kind in cls:
            if kind.id == kind_id:
                return kind
        raise ValueError(f"unknown baseline '{kind_id}'")


def _centered(center: float, half: float) -> ConfidenceSet:
    return ConfidenceSet.from_bounds(center - half, center + half)


def chebyshev_half_width(t: int, sigma2: float, alpha: float) -> float:
    return math.sqrt(sigma2) / math.sqrt(alpha * t)


def chernoff_half_width(t: int, sigma2: float, alpha: float) -> float:
    return math.sqrt(sigma2) * math.sqrt(2.0 * math.log(2.0 / alpha) / t)


def normal_mixture_half_width(t: int, sigma2: float, alpha: float) -> float:
    return math.sqrt(sigma2) * math.sqrt((t + 1) * math.log(4.0 * (t + 1) / (alpha * alpha))) / t


def stitched_subgaussian_half_width(t: int, alpha: float, sigma: float = 1.0) -> float:
    return sigma * 1.7 * math.sqrt((math.log(math.log(2.0 * t)) + 0.72 * math.log(10.4 / alpha)) / t)


def chebyshev_ci(t: int, mean_hat: float, sigma2: float, alpha: float) -> ConfidenceSet:
    return _centered(mean_hat, chebyshev_half_width(t, sigma2, alpha))


def chernoff_ci(t: int, mean_hat: float, sigma2: float, alpha: float) -> ConfidenceSet:
    return _centered(mean_hat, chernoff_half_width(t, sigma2, alpha))


def normal_mixture_cs(t: int, mean_hat: float, sigma2: float, alpha: float) -> ConfidenceSet:
    return _centered(mean_hat, normal_mixture_half_width(t, sigma2, alpha))


def pm_hoeffding_cs(state: StreamState, sigma2: float, alpha: float) -> ConfidenceSet:
    """[(sum lam X +- (sigma2 sum lam^2 / 2 + log(2/alpha))) / sum lam]."""
    half = sigma2 * state.sum_lam2 / 2.0 + math.log(2.0 / alpha)
    return ConfidenceSet.from_bounds(
        (state.sum_lam_x - half) / state.sum_lam,
        (state.sum_lam_x + half) / state.sum_lam,
    )


def stitched_subgaussian_cs(t: int, mean_hat: float, alpha: float, sigma: float = 1.0) -> ConfidenceSet:
    return _centered(mean_hat, stitched_subgaussian_half_width(t, alpha, sigma))


def catoni_ci_lambda(t: int, sigma2: float, alpha: float) -> float:
    """Tuned Catoni coefficient at index t, without the floor clamp."""
    if not t > 2.0 * math.log(2.0 / alpha):
        raise LevelTooSmallError(t, alpha)
    return catoni_lambda(t, alpha, sigma2, floor_index=0)


def catoni_ci(history: Sequence[float], t: int, sigma2: float, alpha: float) -> ConfidenceSet:
    """Fixed-time Catoni interval over history[:t] with the coefficient held at index t."""
    lam = catoni_ci_lambda(t, sigma2, alpha)
    xs = np.asarray(history[:t], dtype=float)
    threshold = sigma2 * t * lam * lam / 2.0 + math.log(2.0 / alpha)
    return catoni_interval(CATONI, np.full(t, lam), xs, threshold, t=t)


def trivial_catoni_level(t: int, alpha: float) -> float:
    return alpha / (t * (t + 1))


def trivial_catoni_cs(history: Sequence[float], t: int, sigma2: float, alpha: float) -> ConfidenceSet:
    """Fixed-time Catoni interval at level alpha / (t (t + 1)); a union bound over t."""
    return catoni_ci(history, t, sigma2, trivial_catoni_level(t, alpha))


class BaselineEstimator(StreamingEstimator):
    """
    Streams a baseline like the confidence sequence estimators.

    The fixed-time Catoni kinds report the full line while their level is still undefined.
    """

    def __init__(self, kind: BaselineKind, config: CsConfig, schedule: Optional[LambdaSchedule] = None):
        if schedule is None:
            # only pm-hoeffding reads lambda; the tuned Catoni schedule matches the Catoni-style set
            schedule = LambdaSchedule.catoni_tuned(config.alpha, config.variance_bound)
        self.keeps_history = kind in (BaselineKind.TRIVIAL_CATONI_CS, BaselineKind.CATONI_CI)
        super().__init__(config, schedule)
        self.kind = kind
        self.sigma2 = config.variance_bound

    def current_set(self) -> ConfidenceSet:
        t, alpha, sigma2 = self.t, self.config.alpha, self.sigma2
        kind = self.kind
        if kind is BaselineKind.PM_HOEFFDING_CS:
            return pm_hoeffding_cs(self.state, sigma2, alpha)
        mean_hat = self.state.mean_x
        if kind is BaselineKind.CHEBYSHEV_CI:
            return chebyshev_ci(t, mean_hat, sigma2, alpha)
        if kind is BaselineKind.CHERNOFF_CI:
            return chernoff_ci(t, mean_hat, sigma2, alpha)
        if kind is BaselineKind.NORMAL_MIXTURE_CS:
            return normal_mixture_cs(t, mean_hat, sigma2, alpha)
        if kind is BaselineKind.STITCHED_SUBGAUSSIAN_CS:
            return stitched_subgaussian_cs(t, mean_hat, alpha, math.sqrt(sigma2))
        xs = [entry.x for entry in self.state.history]
        try:
            if kind is BaselineKind.TRIVIAL_CATONI_CS:
                return trivial_catoni_cs(xs, t, sigma2, alpha)
            return catoni_ci(xs, t, sigma2, alpha)
        except LevelTooSmallError:
            return ConfidenceSet.full_line()


if __name__ == '__main__':
    config = CsConfig(alpha=0.05, sigma2=1.0)
    for t in (10, 100, 1000):
        print(t, chebyshev_half_width(t, 1.0, 0.05), normal_mixture_half_width(t, 1.0, 0.05),
              stitched_subgaussian_half_width(t, 0.05))
    rng = np.random.default_rng(7)
    est = BaselineEstimator(BaselineKind.PM_HOEFFDING_CS, config)
    for t, cs in est.stream(rng.standard_t(3.0, size=1000) / math.sqrt(3.0)):
        if t in (10, 100, 1000):
            print(t, cs)
