import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from cs_core.config import CsConfig, Observation
from cs_core.confidence_set import ConfidenceSet, intersect
from cs_core.errors import ConfigError, SequencingError
from utils.logger import log


class CompensatedSum:
    """Running sum with Neumaier compensation."""

    __slots__ = ("total", "carry")

    def __init__(self):
        self.total = 0.0
        self.carry = 0.0

    def add(self, value: float) -> None:
        new_total = self.total + value
        # keep the low-order bits lost by the addition
        if abs(self.total) >= abs(value):
            self.carry += (self.total - new_total) + value
        else:
            self.carry += (value - new_total) + self.total
        self.total = new_total

    @property
    def value(self) -> float:
        return self.total + self.carry


@dataclass(frozen=True)
class HistoryEntry:
    lam: float
    x: float
    sigma2: float
    v: float


SUM_NAMES = (
    "sum_lam", "sum_lam2", "sum_lam_x", "sum_lam2_x", "sum_lam2_x2",
    "sum_x", "sum_x2", "sum_lam2_sig2", "sum_v_lamp",
)


def _terms(entry: HistoryEntry, p: float) -> Tuple[float, ...]:
    # one term per name in SUM_NAMES; shared by update and replay so both fold identical floats
    lam, x = entry.lam, entry.x
    lam2 = lam * lam
    lam_p = lam2 if p == 2.0 else lam ** p
    return (
        lam,
        lam2,
        lam * x,
        lam2 * x,
        lam2 * x * x,
        x,
        x * x,
        lam2 * entry.sigma2,
        entry.v * lam_p,
    )


class StreamState:
    """
    Accumulator of the running sums every estimator reads.

    The history of (lambda, x, sigma2, v) rows is kept only when keep_history is set,
    which root-finding estimators require.
    """

    def __init__(self, config: Optional[CsConfig] = None, keep_history: bool = False):
        self.config = config
        self.p = config.p if config is not None else 2.0
        self.keep_history = keep_history
        self.t = 0
        self._sums = {name: CompensatedSum() for name in SUM_NAMES}
        self.history: List[HistoryEntry] = []

    def __getattr__(self, name):
        # exposes sum_lam, sum_lam2, ... as read-only attributes
        sums = self.__dict__.get("_sums")
        if sums is not None and name in sums:
            return sums[name].value
        raise AttributeError(name)

    def _step_bounds(self, obs: Observation) -> Tuple[float, float]:
        cfg = self.config
        if cfg is None:
            s2 = obs.sigma_t * obs.sigma_t if obs.sigma_t is not None else math.nan
            v = obs.v_t if obs.v_t is not None else s2
            return s2, v
        if cfg.heteroscedastic:
            s2 = cfg.step_sigma2(obs) if obs.sigma_t is not None else math.nan
            return s2, cfg.step_v(obs)
        try:
            s2 = cfg.variance_bound
        except ConfigError:
            s2 = math.nan
        return s2, cfg.moment_bound

    def update(self, lambda_t: float, obs: Observation) -> "StreamState":
        """Advances every sum by the term of obs; lambda_t must be computed from data up to t-1."""
        if obs.t != self.t + 1:
            raise SequencingError(expected=self.t + 1, got=obs.t)
        s2, v = self._step_bounds(obs)
        entry = HistoryEntry(lam=float(lambda_t), x=float(obs.x), sigma2=s2, v=v)
        for name, term in zip(SUM_NAMES, _terms(entry, self.p)):
            self._sums[name].add(term)
        if self.keep_history:
            self.history.append(entry)
        self.t = obs.t
        return self

    @classmethod
    def replay(cls, history: Sequence[HistoryEntry], p: float = 2.0) -> "StreamState":
        """Folds a history in order; every sum equals the one obtained by streaming it."""
        state = cls(config=None, keep_history=True)
        state.p = p
        for entry in history:
            for name, term in zip(SUM_NAMES, _terms(entry, p)):
                state._sums[name].add(term)
            state.history.append(entry)
            state.t += 1
        return state

    def sums(self) -> dict:
        return {name: acc.value for name, acc in self._sums.items()}

    @property
    def mean_x(self) -> float:
        return self.sum_x / self.t if self.t else math.nan

    @property
    def weighted_mean(self) -> float:
        """lambda-weighted mean sum(lam x) / sum(lam)."""
        return self.sum_lam_x / self.sum_lam if self.t else math.nan

    def history_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        if not self.history:
            empty = np.empty(0)
            return empty, empty, empty, empty
        lams, xs, s2s, vs = np.array([(e.lam, e.x, e.sigma2, e.v) for e in self.history]).T
        return lams, xs, s2s, vs


class RunningIntersection:
    """Intersects each incoming set with all previous ones."""

    def __init__(self):
        self.current = ConfidenceSet.full_line()
        self.emptied_at: Optional[int] = None
        self._steps = 0

    def step(self, new_set: ConfidenceSet) -> ConfidenceSet:
        self._steps += 1
        self.current = intersect(self.current, new_set)
        if self.current.is_empty and self.emptied_at is None:
            self.emptied_at = self._steps
            log.warning(f"running intersection became empty at t={self._steps}")
        return self.current
