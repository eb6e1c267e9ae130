from typing import Iterable, Iterator, Optional, Tuple

from cs_core.config import CsConfig, Observation
from cs_core.confidence_set import ConfidenceSet
from cs_core.errors import PredictabilityError, SequencingError
from cs_core.stream_state import RunningIntersection, StreamState
from cs_schedules.lambda_schedules import LambdaSchedule
from utils.logger import log


class StreamingEstimator:
    """
    Common step loop of the confidence sequence estimators.

    Subclasses implement current_set(); keeps_history selects whether the state retains rows.
    """
    keeps_history: bool = False
    needs_sigma: bool = False

    def __init__(self, config: CsConfig, schedule: LambdaSchedule):
        self.config = config
        self.schedule = schedule
        self.state = StreamState(config, keep_history=self.keeps_history)
        self._cursor = schedule.cursor()
        self._running = RunningIntersection() if config.intersect else None

    @property
    def t(self) -> int:
        return self.state.t

    def current_set(self) -> ConfidenceSet:
        raise NotImplementedError

    def validate(self, obs: Observation) -> None:
        """Raises before any state changes when obs cannot be folded in."""
        if obs.t != self.t + 1:
            raise SequencingError(expected=self.t + 1, got=obs.t)
        if self.needs_sigma and self.config.heteroscedastic and obs.sigma_t is None:
            raise PredictabilityError(f"heteroscedastic mode needs sigma_t at t={obs.t}")

    def _advance(self, obs: Observation) -> float:
        lam = self._cursor.next_lambda()
        self.state.update(lam, obs)
        self._cursor.observe(obs.x)
        return lam

    def step(self, obs: Observation) -> ConfidenceSet:
        self.validate(obs)
        lam = self._advance(obs)
        raw = self.current_set()
        log.debug(f"{type(self).__name__} t={obs.t} lambda={lam:.6g} set={raw}")
        if self._running is not None:
            return self._running.step(raw)
        return raw

    def stream(self, xs: Iterable[float], sigmas: Optional[Iterable[float]] = None) -> Iterator[Tuple[int, ConfidenceSet]]:
        """Feeds plain values (and optional per-step sigma_t) and yields (t, set)."""
        sigma_iter = iter(sigmas) if sigmas is not None else None
        for x in xs:
            sigma_t = next(sigma_iter) if sigma_iter is not None else None
            obs = Observation(t=self.t + 1, x=float(x), sigma_t=sigma_t)
            yield obs.t, self.step(obs)
