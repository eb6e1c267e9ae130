from dataclasses import dataclass

import numpy as np

from cs_core.errors import ConfigError


@dataclass(frozen=True)
class InfluenceFn:
    """
    Catoni-type influence function of order p.

    phi(x) = log(1 + x + |x|^p / p) for x >= 0 and -log(1 - x + |x|^p / p) for x < 0.
    It is odd, strictly increasing and phi(0) = 0.
    """
    p: float = 2.0

    def __post_init__(self):
        if not 1.0 < self.p <= 2.0:
            raise ConfigError(f"influence order p must lie in (1, 2], got {self.p}")

    def power_term(self, ax: np.ndarray) -> np.ndarray:
        if self.p == 2.0:
            return ax * ax / 2.0
        return ax ** self.p / self.p

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        out = np.sign(x) * np.log1p(ax + self.power_term(ax))
        return out if out.ndim else float(out)

    def upper_envelope(self, x):
        """log(1 + x + |x|^p / p)."""
        x = np.asarray(x, dtype=float)
        return np.log(1.0 + x + self.power_term(np.abs(x)))

    def lower_envelope(self, x):
        """-log(1 - x + |x|^p / p); nan where the argument is not positive."""
        x = np.asarray(x, dtype=float)
        arg = 1.0 - x + self.power_term(np.abs(x))
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(arg > 0.0, -np.log(np.where(arg > 0.0, arg, 1.0)), np.nan)


CATONI = InfluenceFn(p=2.0)


def phi(inf: InfluenceFn, x):
    return inf(x)
