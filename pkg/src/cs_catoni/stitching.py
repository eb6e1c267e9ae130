import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import zeta

from cs_catoni.catoni_cs import catoni_interval
from cs_catoni.influence import CATONI
from cs_core.config import CsConfig, Observation
from cs_core.confidence_set import ConfidenceSet
from cs_core.errors import ConfigError, SequencingError
from cs_core.stream_state import RunningIntersection
from utils.logger import log

STITCH_EXPONENT = 1.4


@dataclass(frozen=True)
class StitchPlan:
    """
    Epochs t_j = 2^j with error budgets alpha_j = alpha / ((j + 1)^1.4 Z) and constant
    coefficients Lambda_j = sqrt(log(2 / alpha_j) 2^(1/2 - j)), Z = sum_m m^-1.4.
    """
    alpha: float
    epochs: List[int]
    alphas: List[float]
    lambdas: List[float]
    normalizer: float

    @property
    def max_epoch(self) -> int:
        return len(self.epochs) - 1

    def level(self, j: int) -> float:
        return self.alpha / ((j + 1) ** STITCH_EXPONENT * self.normalizer)

    def coefficient(self, j: int) -> float:
        return math.sqrt(math.log(2.0 / self.level(j)) * 2.0 ** (0.5 - j))


def stitch_plan(alpha: float, max_epoch: int = 60) -> StitchPlan:
    if max_epoch < 0:
        raise ConfigError(f"max_epoch must be nonnegative, got {max_epoch}")
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    normalizer = float(zeta(STITCH_EXPONENT))
    alphas = [alpha / ((j + 1) ** STITCH_EXPONENT * normalizer) for j in range(max_epoch + 1)]
    lambdas = [math.sqrt(math.log(2.0 / a) * 2.0 ** (0.5 - j)) for j, a in enumerate(alphas)]
    return StitchPlan(
        alpha=alpha,
        epochs=[2 ** j for j in range(max_epoch + 1)],
        alphas=alphas,
        lambdas=lambdas,
        normalizer=normalizer,
    )


def epoch_of(t: int) -> int:
    """j with 2^j <= t < 2^(j+1)."""
    return t.bit_length() - 1


def stitched_boundary(t: int, alpha: float) -> float:
    """6.8 sqrt((log log 2t + 0.72 log(10.4 / alpha)) / t) for unit variance."""
    return 6.8 * math.sqrt((math.log(math.log(2.0 * t)) + 0.72 * math.log(10.4 / alpha)) / t)


@dataclass(frozen=True)
class StitchedResult:
    cs: ConfidenceSet
    epoch: int
    boundary: Optional[float]


def stitched_catoni_set(plan: StitchPlan, history: Sequence[float], t: int, sigma2: float = 1.0) -> StitchedResult:
    """
    Constant-coefficient Catoni set of epoch j = floor(log2 t) at level alpha_j over history[:t].

    Inputs are divided by sigma before use and the set is scaled back afterwards. The boundary
    is reported only once (1/2 - Lambda_j^2) t >= log(2 / alpha_0) + log(2 / alpha_j).
    """
    sigma = math.sqrt(sigma2)
    z = np.asarray(history[:t], dtype=float) / sigma
    j = epoch_of(t)
    level = plan.level(j)
    lam = plan.coefficient(j)
    lams = np.full(t, lam)
    threshold = lam * lam * t / 2.0 + math.log(2.0 / level)
    standardized = catoni_interval(CATONI, lams, z, threshold, t=t)
    cs = ConfidenceSet.from_bounds(standardized.lower * sigma, standardized.upper * sigma)

    boundary = None
    if (0.5 - lam * lam) * t >= math.log(2.0 / plan.level(0)) + math.log(2.0 / level):
        boundary = stitched_boundary(t, plan.alpha) * sigma
    return StitchedResult(cs=cs, epoch=j, boundary=boundary)


class StitchedCatoniEstimator:
    """Streaming wrapper over stitched_catoni_set; keeps the raw observations."""

    def __init__(self, config: CsConfig, max_epoch: int = 60):
        self.config = config
        self.plan = stitch_plan(config.alpha, max_epoch)
        self.sigma2 = config.variance_bound
        self.xs: List[float] = []
        self.last: Optional[StitchedResult] = None
        self._running = RunningIntersection() if config.intersect else None

    @property
    def t(self) -> int:
        return len(self.xs)

    def step(self, obs: Observation) -> ConfidenceSet:
        if obs.t != self.t + 1:
            raise SequencingError(expected=self.t + 1, got=obs.t)
        self.xs.append(float(obs.x))
        self.last = stitched_catoni_set(self.plan, self.xs, self.t, self.sigma2)
        if self.last.epoch > self.plan.max_epoch:
            log.warning(f"t={self.t} is past the last planned epoch {self.plan.max_epoch}")
        if self._running is not None:
            return self._running.step(self.last.cs)
        return self.last.cs

    def stream(self, xs: Sequence[float]):
        for x in xs:
            obs = Observation(t=self.t + 1, x=float(x))
            yield obs.t, self.step(obs)


if __name__ == '__main__':
    plan = stitch_plan(0.05)
    print([round(plan.level(j), 6) for j in range(5)])
    rng = np.random.default_rng(7)
    est = StitchedCatoniEstimator(CsConfig(alpha=0.05, sigma2=1.0))
    for t, cs in est.stream(rng.standard_t(3.0, size=1000) / math.sqrt(3.0)):
        if t in (10, 100, 1000):
            print(t, epoch_of(t), cs)
