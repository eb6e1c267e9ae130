from typing import Any, Dict, Optional


class ConfidenceSequenceError(Exception):
    """Base class of every error raised by the confidence sequence packages."""


class ConfigError(ConfidenceSequenceError, ValueError):
    """Invalid configuration values or flag combinations."""


class SequencingError(ConfidenceSequenceError):
    """An observation arrived with an index other than state.t + 1."""

    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"out-of-order observation: expected t={expected}, got t={got}")


class PredictabilityError(ConfidenceSequenceError):
    """A per-step bound required by the active mode is missing from an observation."""


class ScheduleError(ConfidenceSequenceError, ValueError):
    """A tuning rule cannot produce a positive coefficient."""


class LevelTooSmallError(ConfidenceSequenceError, ValueError):
    """The fixed-t Catoni interval needs t > 2 log(2/alpha)."""

    def __init__(self, t: int, alpha: float):
        self.t = t
        self.alpha = alpha
        super().__init__(f"fixed-time Catoni interval undefined at t={t}, alpha={alpha:g}: needs t > 2 log(2/alpha)")


class RootFindingError(ConfidenceSequenceError, ArithmeticError):
    """Bracket expansion failed to straddle the target value."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        details = ", ".join(f"{k}={v!r}" for k, v in self.diagnostics.items())
        super().__init__(f"{message} ({details})" if details else message)


class ReplicationError(ConfidenceSequenceError):
    """An estimator failed inside a Monte-Carlo replication."""

    def __init__(self, rep: int, t: Optional[int], cause: BaseException):
        self.rep = rep
        self.t = t
        super().__init__(f"replication {rep} failed at t={t}: {cause}")
