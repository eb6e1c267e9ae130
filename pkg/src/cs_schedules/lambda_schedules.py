import math
from dataclasses import dataclass, field
from typing import Any, Dict, Sequence

import numpy as np

from cs_core.errors import ScheduleError
from utils.logger import log

SCHEDULE_KINDS = (
    "constant",
    "inv-sqrt-capped",
    "ds-tuned",
    "sn-tuned",
    "catoni-tuned",
    "p-catoni-tuned",
    "het-matched",
    "custom-table",
)


def ds_lambda(t: int, alpha: float, sigma2: float) -> float:
    """Tuned Dubins-Savage coefficient sqrt((2/alpha - 1) / (sigma2 t))."""
    return math.sqrt((2.0 / alpha - 1.0) / (sigma2 * t))


def sn_lambda(t: int, alpha: float, sigma2: float, prev_sum_x: float, prev_sum_x2: float) -> float:
    """
    Tuned self-normalized coefficient.

    prev_sum_x and prev_sum_x2 are the sums of X_i and X_i^2 over i < t, while the leading
    factors use the current t. The sums cover t - 1 terms, so the coefficient changes when the
    data are shifted; self-normalized sets built on it are not translation equivariant.
    """
    log_term = math.log(2.0 / alpha)
    denominator = t * (prev_sum_x2 + 2.0 * sigma2 * t) - prev_sum_x * prev_sum_x
    if not denominator > 0.0:
        raise ScheduleError(f"self-normalized tuning has non-positive denominator {denominator!r} at t={t}")
    return math.sqrt(6.0 * t * log_term / denominator)


def effective_floor_index(alpha: float, floor_index: int = 9) -> int:
    """Smallest admissible index floor for the Catoni tuning at level alpha."""
    two_log = 2.0 * math.log(2.0 / alpha)
    if floor_index > two_log:
        return floor_index
    raised = math.ceil(two_log) + 1
    log.warning(f"floor_index={floor_index} too small for alpha={alpha:g}, raising it to {raised}")
    return raised


def catoni_lambda(t: int, alpha: float, sigma2: float, floor_index: int = 9) -> float:
    """
    Tuned Catoni coefficient, evaluated at the clamped index s = max(t, floor_index).

    eta_s^2 = 2 sigma2 log(2/alpha) / (s - 2 log(2/alpha))
    lambda = sqrt(2 log(2/alpha) / (s (sigma2 + eta_s^2)))
    """
    log_term = math.log(2.0 / alpha)
    s = max(t, floor_index)
    if s <= 2.0 * log_term:
        raise ScheduleError(
            f"catoni tuning needs max(t, floor_index) > 2 log(2/alpha) = {2.0 * log_term:.4f}, "
            f"got {s}; use a larger floor_index"
        )
    eta2 = 2.0 * sigma2 * log_term / (s - 2.0 * log_term)
    return math.sqrt(2.0 * log_term / (s * (sigma2 + eta2)))


def p_catoni_lambda(t: int, alpha: float, p: float, v: float) -> float:
    return 0.5 * (2.0 * p * math.log(2.0 / alpha) / (t * v)) ** (1.0 / p)


def capped_inv_sqrt(t: int, cap: float) -> float:
    return min(1.0 / math.sqrt(t), cap)


def het_matched_lambda(t: int, gamma: float, scale: float) -> float:
    if not 0.0 <= gamma < 0.5:
        raise ScheduleError(f"gamma must lie in [0, 1/2), got {gamma}")
    return scale * t ** (-0.5 - gamma)


@dataclass(frozen=True)
class LambdaSchedule:
    """
    Predictable coefficient generator.

    Only the sn-tuned kind looks at data; every other kind is a deterministic function of t.
    """
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ScheduleError(f"unknown schedule kind '{self.kind}', expected one of {SCHEDULE_KINDS}")

    # factories

    @classmethod
    def constant(cls, value: float) -> "LambdaSchedule":
        if not value > 0.0:
            raise ScheduleError(f"constant coefficient must be positive, got {value}")
        return cls("constant", {"value": float(value)})

    @classmethod
    def capped_inv_sqrt(cls, cap: float = 0.1) -> "LambdaSchedule":
        if not cap > 0.0:
            raise ScheduleError(f"cap must be positive, got {cap}")
        return cls("inv-sqrt-capped", {"cap": float(cap)})

    @classmethod
    def ds_tuned(cls, alpha: float, sigma2: float) -> "LambdaSchedule":
        return cls("ds-tuned", {"alpha": alpha, "sigma2": sigma2})

    @classmethod
    def sn_tuned(cls, alpha: float, sigma2: float) -> "LambdaSchedule":
        return cls("sn-tuned", {"alpha": alpha, "sigma2": sigma2})

    @classmethod
    def catoni_tuned(cls, alpha: float, sigma2: float, floor_index: int = 9) -> "LambdaSchedule":
        floor_index = effective_floor_index(alpha, floor_index)
        return cls("catoni-tuned", {"alpha": alpha, "sigma2": sigma2, "floor_index": floor_index})

    @classmethod
    def p_catoni_tuned(cls, alpha: float, p: float, v: float) -> "LambdaSchedule":
        return cls("p-catoni-tuned", {"alpha": alpha, "p": p, "v": v})

    @classmethod
    def het_matched(cls, gamma: float, scale: float = 1.0) -> "LambdaSchedule":
        if not 0.0 <= gamma < 0.5:
            raise ScheduleError(f"gamma must lie in [0, 1/2), got {gamma}")
        return cls("het-matched", {"gamma": gamma, "scale": scale})

    @classmethod
    def custom_table(cls, values: Sequence[float]) -> "LambdaSchedule":
        table = tuple(float(x) for x in values)
        if not table or min(table) <= 0.0:
            raise ScheduleError("custom table must be non-empty with positive entries")
        return cls("custom-table", {"table": table})

    # evaluation

    @property
    def is_data_dependent(self) -> bool:
        return self.kind == "sn-tuned"

    def lambda_at(self, t: int, prev_sum_x: float = 0.0, prev_sum_x2: float = 0.0) -> float:
        """lambda_t given the sums of X and X^2 over i < t (ignored by data-free kinds)."""
        k, p = self.kind, self.params
        if k == "constant":
            return p["value"]
        if k == "inv-sqrt-capped":
            return capped_inv_sqrt(t, p["cap"])
        if k == "ds-tuned":
            return ds_lambda(t, p["alpha"], p["sigma2"])
        if k == "sn-tuned":
            return sn_lambda(t, p["alpha"], p["sigma2"], prev_sum_x, prev_sum_x2)
        if k == "catoni-tuned":
            return catoni_lambda(t, p["alpha"], p["sigma2"], p["floor_index"])
        if k == "p-catoni-tuned":
            return p_catoni_lambda(t, p["alpha"], p["p"], p["v"])
        if k == "het-matched":
            return het_matched_lambda(t, p["gamma"], p["scale"])
        # custom-table: last value extends past the end of the table
        table = p["table"]
        return table[min(t, len(table)) - 1]

    def lambda_from_history(self, t: int, xs: Sequence[float]) -> float:
        """Reference evaluation of lambda_t that reads xs[:t-1] only."""
        past = np.asarray(xs[: t - 1], dtype=float)
        sum_x = 0.0
        sum_x2 = 0.0
        for x in past:
            sum_x += float(x)
            sum_x2 += float(x) * float(x)
        return self.lambda_at(t, sum_x, sum_x2)

    def lambdas_for(self, xs: Sequence[float]) -> np.ndarray:
        """lambda_1..lambda_n for the stream xs, equal to what a cursor emits along it."""
        xs = np.asarray(xs, dtype=float)
        n = xs.shape[0]
        t = np.arange(1, n + 1, dtype=float)
        k, p = self.kind, self.params
        if k == "constant":
            return np.full(n, p["value"])
        if k == "inv-sqrt-capped":
            return np.minimum(1.0 / np.sqrt(t), p["cap"])
        if k == "ds-tuned":
            return np.sqrt((2.0 / p["alpha"] - 1.0) / (p["sigma2"] * t))
        if k == "sn-tuned":
            prev_x = np.concatenate(([0.0], np.cumsum(xs)[:-1]))
            prev_x2 = np.concatenate(([0.0], np.cumsum(xs * xs)[:-1]))
            log_term = math.log(2.0 / p["alpha"])
            denominator = t * (prev_x2 + 2.0 * p["sigma2"] * t) - prev_x * prev_x
            if n and not np.all(denominator > 0.0):
                raise ScheduleError("self-normalized tuning has a non-positive denominator")
            return np.sqrt(6.0 * t * log_term / denominator)
        if k == "catoni-tuned":
            # depends on t only through max(t, floor_index)
            head = min(n, p["floor_index"])
            values = np.array([catoni_lambda(i, p["alpha"], p["sigma2"], p["floor_index"]) for i in range(1, head + 1)])
            if n <= head:
                return values
            log_term = math.log(2.0 / p["alpha"])
            s = t[head:]
            eta2 = 2.0 * p["sigma2"] * log_term / (s - 2.0 * log_term)
            return np.concatenate((values, np.sqrt(2.0 * log_term / (s * (p["sigma2"] + eta2)))))
        if k == "p-catoni-tuned":
            return 0.5 * (2.0 * p["p"] * math.log(2.0 / p["alpha"]) / (t * p["v"])) ** (1.0 / p["p"])
        if k == "het-matched":
            return p["scale"] * t ** (-0.5 - p["gamma"])
        table = np.asarray(p["table"])
        return table[np.minimum(t.astype(int), len(table)) - 1]

    def cursor(self) -> "ScheduleCursor":
        return ScheduleCursor(self)


class ScheduleCursor:
    """Per-stream state of a schedule; keeps its own sums of X and X^2."""

    def __init__(self, schedule: LambdaSchedule):
        self.schedule = schedule
        self.t = 0
        self.sum_x = 0.0
        self.sum_x2 = 0.0

    def next_lambda(self) -> float:
        """lambda_{t+1}, from data up to t."""
        lam = self.schedule.lambda_at(self.t + 1, self.sum_x, self.sum_x2)
        if not lam > 0.0:
            raise ScheduleError(f"schedule {self.schedule.kind} emitted non-positive lambda {lam} at t={self.t + 1}")
        return lam

    def observe(self, x: float) -> None:
        self.t += 1
        self.sum_x += x
        self.sum_x2 += x * x
