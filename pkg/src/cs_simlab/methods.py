"""
Registry of the confidence sequence methods driven by the harness and the cli.

Every method can be streamed step by step. For Monte-Carlo work the methods also answer
"is mu inside the set at every t" and "when does the lower bound first pass a threshold"
from cumulative sums, without root finding:

- Catoni family: m in C_t  <=>  |sum_{i<=t} phi(lam_i (x_i - m))| <= c_t, and
  lower_t > thr  <=>  sum_{i<=t} phi(lam_i (x_i - thr)) > c_t, because the map is decreasing.
- Closed forms: center and half-width are cumulative sums.

Running intersections turn per-t membership into a cumulative AND and crossings into a
cumulative OR.
"""
import math
from typing import Dict, List, Optional, Sequence

import numpy as np

from cs_baselines.baselines import (
    BaselineEstimator,
    BaselineKind,
    catoni_ci,
    catoni_ci_lambda,
    trivial_catoni_level,
)
from cs_catoni.catoni_cs import CatoniEstimator, catoni_interval
from cs_catoni.influence import CATONI, InfluenceFn
from cs_catoni.stitching import StitchedCatoniEstimator, epoch_of, stitch_plan, stitched_catoni_set
from cs_closed_form.dubins_savage import DsEstimator
from cs_closed_form.self_normalized import SnEstimator
from cs_core.config import CsConfig
from cs_core.confidence_set import ConfidenceSet
from cs_core.errors import ConfigError
from cs_schedules.lambda_schedules import LambdaSchedule

METHOD_IDS = (
    "ds",
    "sn",
    "catoni",
    "catoni-stitched",
    "catoni-onesided",
    "p-catoni",
    "chebyshev",
    "chernoff",
    "nmix",
    "pm-hoeffding",
    "stitched-subg",
    "trivial-catoni",
    "catoni-ci",
)

BASELINE_IDS = {
    "chebyshev": BaselineKind.CHEBYSHEV_CI,
    "chernoff": BaselineKind.CHERNOFF_CI,
    "nmix": BaselineKind.NORMAL_MIXTURE_CS,
    "pm-hoeffding": BaselineKind.PM_HOEFFDING_CS,
    "stitched-subg": BaselineKind.STITCHED_SUBGAUSSIAN_CS,
    "trivial-catoni": BaselineKind.TRIVIAL_CATONI_CS,
    "catoni-ci": BaselineKind.CATONI_CI,
}


def _first_true(mask: np.ndarray) -> Optional[int]:
    """1-based index of the first True entry, None when there is none."""
    hits = np.flatnonzero(mask)
    return int(hits[0]) + 1 if hits.size else None


class CsMethod:
    """
    A configured method. The generic paths stream the estimator; subclasses override
    membership_mask / crossing_mask / sets_at with array arithmetic where possible.
    """

    def __init__(self, method_id: str, config: CsConfig, schedule: Optional[LambdaSchedule] = None):
        self.method_id = method_id
        self.config = config
        self.schedule = schedule

    def estimator(self):
        raise NotImplementedError

    def _sigma2_steps(self, n: int, sigmas: Optional[np.ndarray]) -> np.ndarray:
        if self.config.heteroscedastic:
            if sigmas is None:
                raise ConfigError(f"{self.method_id}: heteroscedastic mode needs per-step sigmas")
            return np.asarray(sigmas, dtype=float)[:n] ** 2
        return np.full(n, self.config.variance_bound)

    def stream(self, xs: Sequence[float], sigmas: Optional[Sequence[float]] = None) -> List[ConfidenceSet]:
        est = self.estimator()
        if self.config.heteroscedastic:
            return [cs for _, cs in est.stream(xs, sigmas)]
        return [cs for _, cs in est.stream(xs)]

    def membership_mask(self, xs: np.ndarray, mu: float, sigmas: Optional[np.ndarray] = None) -> np.ndarray:
        """Per-t membership of mu in the raw (not intersected) set."""
        raw = self._raw_stream(xs, sigmas)
        return np.array([cs.contains(mu) for cs in raw], dtype=bool)

    def crossing_mask(self, xs: np.ndarray, threshold: float, sigmas: Optional[np.ndarray] = None) -> np.ndarray:
        """Per-t indicator that the raw set's lower end exceeds threshold."""
        raw = self._raw_stream(xs, sigmas)
        return np.array([cs.lower > threshold for cs in raw], dtype=bool)

    def _raw_stream(self, xs, sigmas) -> List[ConfidenceSet]:
        est = self.estimator()
        running = getattr(est, "_running", None)
        est._running = None
        try:
            if self.config.heteroscedastic:
                return [cs for _, cs in est.stream(xs, sigmas)]
            return [cs for _, cs in est.stream(xs)]
        finally:
            est._running = running

    def covers(self, xs: Sequence[float], mu: float, sigmas: Optional[Sequence[float]] = None) -> np.ndarray:
        mask = self.membership_mask(np.asarray(xs, dtype=float), mu, sigmas)
        if self.config.intersect:
            return np.logical_and.accumulate(mask)
        return mask

    def crossing_time(self, xs: Sequence[float], threshold: float, sigmas: Optional[Sequence[float]] = None) -> Optional[int]:
        mask = self.crossing_mask(np.asarray(xs, dtype=float), threshold, sigmas)
        if self.config.intersect:
            mask = np.logical_or.accumulate(mask)
        return _first_true(mask)

    def sets_at(self, xs: Sequence[float], ts: Sequence[int], sigmas: Optional[Sequence[float]] = None) -> Dict[int, ConfidenceSet]:
        wanted = set(ts)
        horizon = max(wanted)
        out = {}
        for t, cs in enumerate(self.stream(np.asarray(xs, dtype=float)[:horizon], sigmas), start=1):
            if t in wanted:
                out[t] = cs
        return out


class DsMethod(CsMethod):

    def estimator(self) -> DsEstimator:
        return DsEstimator(self.config, self.schedule)

    def _bounds(self, xs: np.ndarray, sigmas) -> tuple:
        est = self.estimator()
        lams = est.schedule.lambdas_for(xs)
        sum_lam = np.cumsum(lams)
        center = np.cumsum(lams * xs) / sum_lam
        half = (2.0 / self.config.alpha - 1.0 + np.cumsum(lams * lams * self._sigma2_steps(len(xs), sigmas))) / sum_lam
        return center, half

    def membership_mask(self, xs, mu, sigmas=None):
        center, half = self._bounds(xs, sigmas)
        return np.abs(center - mu) <= half

    def crossing_mask(self, xs, threshold, sigmas=None):
        center, half = self._bounds(xs, sigmas)
        return center - half > threshold


class SnMethod(CsMethod):

    def estimator(self) -> SnEstimator:
        return SnEstimator(self.config, self.schedule)

    def membership_mask(self, xs, mu, sigmas=None):
        est = self.estimator()
        alpha = est.sn_alpha
        lams = est.schedule.lambdas_for(xs)
        lam2 = lams * lams
        s2 = self._sigma2_steps(len(xs), sigmas)
        y = xs - mu
        # Q+-(mu) = sum lam^2 ((x - mu)^2 + 2 sigma^2) / 6 -+ sum lam (x - mu) + log(2/alpha)
        quad = np.cumsum(lam2 * (y * y + 2.0 * s2)) / 6.0
        lin = np.cumsum(lams * y)
        log_term = math.log(2.0 / alpha)
        mask = (quad - lin + log_term >= 0.0) & (quad + lin + log_term >= 0.0)
        if est.companion is not None:
            companion = DsMethod("ds", est.companion.config, est.companion.schedule)
            mask &= companion.membership_mask(xs, mu, sigmas)
        return mask


class CatoniMethod(CsMethod):
    """catoni, catoni-onesided and p-catoni."""

    def __init__(self, method_id, config, schedule=None, one_sided=False, floor_index=9):
        super().__init__(method_id, config, schedule)
        self.one_sided = one_sided
        self.floor_index = floor_index
        self.influence = InfluenceFn(p=config.p)

    def estimator(self) -> CatoniEstimator:
        return CatoniEstimator(self.config, self.schedule, one_sided=self.one_sided, floor_index=self.floor_index)

    def _lambdas_and_thresholds(self, xs: np.ndarray, sigmas) -> tuple:
        lams = self.estimator().schedule.lambdas_for(xs)
        if self.config.p == 2.0:
            var = np.cumsum(lams * lams * self._sigma2_steps(len(xs), sigmas)) / 2.0
        else:
            if self.config.heteroscedastic:
                raise ConfigError("vectorized p-catoni supports a constant moment bound only")
            var = np.cumsum(self.config.moment_bound * lams ** self.config.p) / self.config.p
        level = self.config.alpha if self.one_sided else self.config.alpha / 2.0
        return lams, var + math.log(1.0 / level)

    def _map(self, lams, xs, m) -> np.ndarray:
        return np.cumsum(self.influence(lams * (xs - m)))

    def membership_mask(self, xs, mu, sigmas=None):
        lams, c = self._lambdas_and_thresholds(xs, sigmas)
        f = self._map(lams, xs, mu)
        if self.one_sided:
            return f <= c
        return np.abs(f) <= c

    def crossing_mask(self, xs, threshold, sigmas=None):
        lams, c = self._lambdas_and_thresholds(xs, sigmas)
        return self._map(lams, xs, threshold) > c

    def sets_at(self, xs, ts, sigmas=None):
        if self.config.intersect:
            return CsMethod.sets_at(self, xs, ts, sigmas)
        xs = np.asarray(xs, dtype=float)
        lams, c = self._lambdas_and_thresholds(xs, sigmas)
        out = {}
        for t in ts:
            out[t] = catoni_interval(self.influence, lams[:t], xs[:t], float(c[t - 1]), one_sided=self.one_sided, t=t)
        return out


class StitchedMethod(CsMethod):

    def __init__(self, method_id, config, schedule=None, max_epoch=60):
        super().__init__(method_id, config, schedule)
        self.plan = stitch_plan(config.alpha, max_epoch)
        self.sigma = math.sqrt(config.variance_bound)

    def estimator(self) -> StitchedCatoniEstimator:
        return StitchedCatoniEstimator(self.config, self.plan.max_epoch)

    def stream(self, xs, sigmas=None):
        return [cs for _, cs in self.estimator().stream(xs)]

    def _epoch_maps(self, xs: np.ndarray, m: float) -> tuple:
        z = xs / self.sigma
        m = m / self.sigma
        n = len(xs)
        f = np.empty(n)
        c = np.empty(n)
        for j in range(epoch_of(n) + 1):
            lo, hi = 2 ** j, min(2 ** (j + 1) - 1, n)
            lam = self.plan.coefficient(j)
            f[lo - 1:hi] = np.cumsum(CATONI(lam * (z[:hi] - m)))[lo - 1:hi]
            t = np.arange(lo, hi + 1, dtype=float)
            c[lo - 1:hi] = lam * lam * t / 2.0 + math.log(2.0 / self.plan.level(j))
        return f, c

    def membership_mask(self, xs, mu, sigmas=None):
        f, c = self._epoch_maps(xs, mu)
        return np.abs(f) <= c

    def crossing_mask(self, xs, threshold, sigmas=None):
        f, c = self._epoch_maps(xs, threshold)
        return f > c

    def sets_at(self, xs, ts, sigmas=None):
        if self.config.intersect:
            return CsMethod.sets_at(self, xs, ts, sigmas)
        xs = np.asarray(xs, dtype=float)
        out = {t: stitched_catoni_set(self.plan, xs, t, self.config.variance_bound).cs for t in ts}
        return out


class ClosedFormBaselineMethod(CsMethod):
    """chebyshev, chernoff, nmix, pm-hoeffding and stitched-subg."""

    def __init__(self, method_id, config, schedule=None):
        super().__init__(method_id, config, schedule)
        self.kind = BASELINE_IDS[method_id]

    def estimator(self) -> BaselineEstimator:
        return BaselineEstimator(self.kind, self.config, self.schedule)

    def _bounds(self, xs: np.ndarray) -> tuple:
        n = len(xs)
        t = np.arange(1, n + 1, dtype=float)
        alpha = self.config.alpha
        sigma2 = self.config.variance_bound
        sigma = math.sqrt(sigma2)
        kind = self.kind
        if kind is BaselineKind.PM_HOEFFDING_CS:
            lams = self.estimator().schedule.lambdas_for(xs)
            sum_lam = np.cumsum(lams)
            half = (sigma2 * np.cumsum(lams * lams) / 2.0 + math.log(2.0 / alpha)) / sum_lam
            return np.cumsum(lams * xs) / sum_lam, half
        center = np.cumsum(xs) / t
        if kind is BaselineKind.CHEBYSHEV_CI:
            half = sigma / np.sqrt(alpha * t)
        elif kind is BaselineKind.CHERNOFF_CI:
            half = sigma * np.sqrt(2.0 * math.log(2.0 / alpha) / t)
        elif kind is BaselineKind.NORMAL_MIXTURE_CS:
            half = sigma * np.sqrt((t + 1.0) * np.log(4.0 * (t + 1.0) / (alpha * alpha))) / t
        else:
            half = sigma * 1.7 * np.sqrt((np.log(np.log(2.0 * t)) + 0.72 * math.log(10.4 / alpha)) / t)
        return center, half

    def membership_mask(self, xs, mu, sigmas=None):
        center, half = self._bounds(xs)
        return np.abs(center - mu) <= half

    def crossing_mask(self, xs, threshold, sigmas=None):
        center, half = self._bounds(xs)
        return center - half > threshold


class FixedTimeCatoniMethod(CsMethod):
    """
    trivial-catoni and catoni-ci. The coefficient is re-tuned at every t, so each step costs O(t);
    crossing searches stop at the first crossing.
    """

    def __init__(self, method_id, config, schedule=None):
        super().__init__(method_id, config, schedule)
        self.kind = BASELINE_IDS[method_id]
        self.sigma2 = config.variance_bound

    def estimator(self) -> BaselineEstimator:
        return BaselineEstimator(self.kind, self.config, self.schedule)

    def _level(self, t: int) -> float:
        if self.kind is BaselineKind.TRIVIAL_CATONI_CS:
            return trivial_catoni_level(t, self.config.alpha)
        return self.config.alpha

    def _map_and_threshold(self, xs: np.ndarray, t: int, m: float) -> Optional[tuple]:
        level = self._level(t)
        if not t > 2.0 * math.log(2.0 / level):
            return None
        lam = catoni_ci_lambda(t, self.sigma2, level)
        f = float(np.sum(CATONI(lam * (xs[:t] - m))))
        return f, self.sigma2 * t * lam * lam / 2.0 + math.log(2.0 / level)

    def membership_mask(self, xs, mu, sigmas=None):
        mask = np.ones(len(xs), dtype=bool)
        for t in range(1, len(xs) + 1):
            res = self._map_and_threshold(xs, t, mu)
            if res is not None:
                mask[t - 1] = abs(res[0]) <= res[1]
        return mask

    def crossing_mask(self, xs, threshold, sigmas=None):
        mask = np.zeros(len(xs), dtype=bool)
        for t in range(1, len(xs) + 1):
            res = self._map_and_threshold(xs, t, threshold)
            if res is not None and res[0] > res[1]:
                mask[t - 1] = True
                break
        return mask

    def sets_at(self, xs, ts, sigmas=None):
        if self.config.intersect:
            return CsMethod.sets_at(self, xs, ts, sigmas)
        xs = np.asarray(xs, dtype=float)
        out = {}
        for t in ts:
            level = self._level(t)
            if t > 2.0 * math.log(2.0 / level):
                out[t] = catoni_ci(xs, t, self.sigma2, level)
            else:
                out[t] = ConfidenceSet.full_line()
        return out


def build_method(
        method_id: str,
        config: CsConfig,
        schedule: Optional[LambdaSchedule] = None,
        floor_index: int = 9,
        max_epoch: int = 60,
) -> CsMethod:
    """Method object for a cli method id."""
    if method_id == "ds":
        return DsMethod(method_id, config, schedule)
    if method_id == "sn":
        return SnMethod(method_id, config, schedule)
    if method_id == "catoni":
        if config.p != 2.0:
            raise ConfigError("method catoni needs p=2, use p-catoni for p < 2")
        return CatoniMethod(method_id, config, schedule, floor_index=floor_index)
    if method_id == "catoni-onesided":
        return CatoniMethod(method_id, config, schedule, one_sided=True, floor_index=floor_index)
    if method_id == "p-catoni":
        return CatoniMethod(method_id, config, schedule, floor_index=floor_index)
    if method_id == "catoni-stitched":
        return StitchedMethod(method_id, config, schedule, max_epoch=max_epoch)
    if method_id in ("trivial-catoni", "catoni-ci"):
        return FixedTimeCatoniMethod(method_id, config, schedule)
    if method_id in BASELINE_IDS:
        return ClosedFormBaselineMethod(method_id, config, schedule)
    raise ConfigError(f"unknown method '{method_id}', expected one of {METHOD_IDS}")
