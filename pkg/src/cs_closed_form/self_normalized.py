import math
from dataclasses import replace
from typing import Optional, Tuple

from cs_core.config import CsConfig, Observation
from cs_core.confidence_set import INF, ConfidenceSet, intersect
from cs_core.estimator import StreamingEstimator
from cs_core.stream_state import StreamState
from cs_closed_form.dubins_savage import DsEstimator
from cs_schedules.lambda_schedules import LambdaSchedule
from utils.logger import log


def sn_quadratics(state: StreamState, alpha: float) -> Tuple[Tuple[float, float, float], Tuple[float, float, float]]:
    """
    Coefficients (a, b, c) of Q+(m) and Q-(m) = a m^2 + b m + c.

    The anti-interval of each sign is {m : Q(m) <= 0}.
    """
    log_term = math.log(2.0 / alpha)
    a = state.sum_lam2 / 6.0
    quad_tail = (state.sum_lam2_x2 + 2.0 * state.sum_lam2_sig2) / 6.0
    u_plus = state.sum_lam2_x / 3.0 - state.sum_lam
    u_minus = state.sum_lam2_x / 3.0 + state.sum_lam
    c_plus = log_term - state.sum_lam_x + quad_tail
    c_minus = log_term + state.sum_lam_x + quad_tail
    return (a, -u_plus, c_plus), (a, -u_minus, c_minus)


def quadratic_sublevel(a: float, b: float, c: float) -> ConfidenceSet:
    """{m : a m^2 + b m + c <= 0} for a > 0, empty when the discriminant is negative."""
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return ConfidenceSet.empty()
    # sign-aware form avoids cancellation when disc ~ b^2
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    if q == 0.0:
        return ConfidenceSet.from_bounds(0.0, 0.0)
    r1, r2 = q / a, c / q
    return ConfidenceSet.from_bounds(min(r1, r2), max(r1, r2))


def sn_anti_sets(state: StreamState, alpha: float) -> Tuple[ConfidenceSet, ConfidenceSet]:
    plus, minus = sn_quadratics(state, alpha)
    return quadratic_sublevel(*plus), quadratic_sublevel(*minus)


def middle_width(cs: ConfidenceSet) -> float:
    """Width of the middle piece of a three-piece set, inf otherwise."""
    if cs.topology != "three-piece":
        return INF
    return cs.intervals[1].width


class SnEstimator(StreamingEstimator):
    """
    Self-normalized confidence sequence: the real line minus the two anti-intervals.

    With config.alpha_split = (a1, a2) the set is computed at level a1 and intersected with a
    Dubins-Savage companion at level a2, which removes the spurious outer pieces.
    """
    needs_sigma = True

    def __init__(
        self,
        config: CsConfig,
        schedule: Optional[LambdaSchedule] = None,
        companion_schedule: Optional[LambdaSchedule] = None,
    ):
        sn_alpha = config.alpha_prime
        if schedule is None:
            schedule = LambdaSchedule.sn_tuned(sn_alpha, config.variance_bound)
        super().__init__(config, schedule)
        self.sn_alpha = sn_alpha
        self.companion: Optional[DsEstimator] = None
        if config.alpha_split is not None:
            ds_alpha = config.alpha_double_prime
            ds_config = replace(config, alpha=ds_alpha, alpha_split=None, intersect=False)
            if companion_schedule is None:
                companion_schedule = LambdaSchedule.ds_tuned(ds_alpha, config.variance_bound)
            self.companion = DsEstimator(ds_config, companion_schedule)
            log.debug(f"self-normalized set at alpha'={sn_alpha:g} with companion at alpha''={ds_alpha:g}")

    def anti_intervals(self) -> Tuple[ConfidenceSet, ConfidenceSet]:
        return sn_anti_sets(self.state, self.sn_alpha)

    def raw_set(self) -> ConfidenceSet:
        return ConfidenceSet.complement_of(self.anti_intervals())

    def current_set(self) -> ConfidenceSet:
        cs = self.raw_set()
        if self.companion is not None:
            cs = intersect(cs, self.companion.current_set())
        return cs

    def _advance(self, obs: Observation) -> float:
        # the self-normalized state moves first; the companion follows on the validated row
        lam = super()._advance(obs)
        if self.companion is not None:
            self.companion.step(obs)
        return lam

    def middle_width(self) -> float:
        return middle_width(self.raw_set())

    def topology(self) -> str:
        return self.raw_set().topology


def sn_anti_intervals(est: SnEstimator) -> Tuple[ConfidenceSet, ConfidenceSet]:
    return est.anti_intervals()


def sn_step(est: SnEstimator, obs: Observation) -> ConfidenceSet:
    return est.step(obs)


def sn_middle_width(est: SnEstimator) -> float:
    return est.middle_width()


if __name__ == '__main__':
    import numpy as np

    rng = np.random.default_rng(7)
    est = SnEstimator(CsConfig(alpha=0.05, sigma2=1.0, alpha_split=(0.025, 0.025), intersect=True))
    for t, cs in est.stream(rng.standard_t(3.0, size=1000) / math.sqrt(3.0)):
        if t in (10, 100, 1000):
            print(t, est.topology(), cs, est.middle_width())
