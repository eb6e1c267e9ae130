import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

from cs_core.errors import ConfigError, PredictabilityError


@dataclass(frozen=True)
class CsConfig:
    """
    Parameters shared by every estimator.

    Parameters:
    - alpha (float): error level in (0, 1).
    - p (float): moment order in (1, 2]. p=2 is the finite-variance setting.
    - sigma2 (float): homoscedastic variance bound, used when p=2.
    - v (float): bound on the p-th central moment, used when p<2.
    - heteroscedastic (bool): read per-step bounds from the observations instead of sigma2 / v.
    - alpha_split (tuple): (alpha', alpha'') for spurious-interval removal of the self-normalized set.
    - intersect (bool): report the running intersection instead of the raw set.
    """
    alpha: float = 0.05
    p: float = 2.0
    sigma2: Optional[float] = None
    v: Optional[float] = None
    heteroscedastic: bool = False
    alpha_split: Optional[Tuple[float, float]] = None
    intersect: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 1.0 < self.p <= 2.0:
            raise ConfigError(f"p must lie in (1, 2], got {self.p}")
        if self.sigma2 is not None and not self.sigma2 > 0.0:
            raise ConfigError(f"sigma2 must be positive, got {self.sigma2}")
        if self.v is not None and not self.v > 0.0:
            raise ConfigError(f"v must be positive, got {self.v}")
        if not self.heteroscedastic:
            if self.p < 2.0 and self.v is None:
                raise ConfigError(f"p={self.p} < 2 requires a moment bound v")
            if self.p == 2.0 and self.sigma2 is None and self.v is None:
                raise ConfigError("p=2 requires a variance bound sigma2")
        if self.alpha_split is not None:
            a1, a2 = self.alpha_split
            if a1 <= 0.0 or a2 <= 0.0:
                raise ConfigError(f"alpha_split entries must be positive, got {self.alpha_split}")
            if abs(a1 + a2 - self.alpha) > 1e-12 * max(1.0, self.alpha):
                raise ConfigError(f"alpha_split {self.alpha_split} must sum to alpha={self.alpha}")

    @property
    def log_two_over_alpha(self) -> float:
        return math.log(2.0 / self.alpha)

    @property
    def alpha_prime(self) -> float:
        """Level of the self-normalized set: alpha' of the split, alpha without one."""
        return self.alpha_split[0] if self.alpha_split is not None else self.alpha

    @property
    def alpha_double_prime(self) -> Optional[float]:
        """Level of the Dubins-Savage companion, None without a split."""
        return self.alpha_split[1] if self.alpha_split is not None else None

    @property
    def variance_bound(self) -> float:
        # p=2 configs may carry the bound in either field
        if self.sigma2 is not None:
            return self.sigma2
        if self.v is not None and self.p == 2.0:
            return self.v
        raise ConfigError("no homoscedastic variance bound configured")

    @property
    def moment_bound(self) -> float:
        if self.p == 2.0:
            return self.variance_bound
        if self.v is None:
            raise ConfigError("no moment bound v configured")
        return self.v

    def with_default_split(self) -> "CsConfig":
        """Returns a copy carrying the (0.9 alpha, 0.1 alpha) split when none is set."""
        if self.alpha_split is not None:
            return self
        return replace(self, alpha_split=(0.9 * self.alpha, self.alpha - 0.9 * self.alpha))

    def step_sigma2(self, obs: "Observation") -> float:
        """Variance bound that applies to obs: its own sigma_t in heteroscedastic mode."""
        if self.heteroscedastic:
            if obs.sigma_t is None:
                raise PredictabilityError(f"heteroscedastic mode needs sigma_t at t={obs.t}")
            return obs.sigma_t * obs.sigma_t
        return self.variance_bound

    def step_v(self, obs: "Observation") -> float:
        """p-th moment bound that applies to obs."""
        if self.heteroscedastic:
            if obs.v_t is not None:
                return obs.v_t
            if self.p == 2.0 and obs.sigma_t is not None:
                return obs.sigma_t * obs.sigma_t
            raise PredictabilityError(f"heteroscedastic mode needs v_t at t={obs.t}")
        return self.moment_bound


@dataclass(frozen=True)
class Observation:
    t: int
    x: float
    sigma_t: Optional[float] = None
    v_t: Optional[float] = None

    def __post_init__(self):
        if self.t < 1:
            raise ConfigError(f"observation index must be positive, got {self.t}")
        if self.sigma_t is not None and self.sigma_t < 0.0:
            raise ConfigError(f"sigma_t must be nonnegative, got {self.sigma_t}")
        if self.v_t is not None and self.v_t < 0.0:
            raise ConfigError(f"v_t must be nonnegative, got {self.v_t}")
