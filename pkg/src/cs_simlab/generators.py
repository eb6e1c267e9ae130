import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from cs_core.errors import ConfigError

FAMILIES = ("gaussian", "student-t", "pareto", "sde-drift")

# range of the seeded random center used when no mean is given
DEFAULT_CENTER_RANGE = (-10.0, 10.0)


@dataclass(frozen=True)
class GeneratorSpec:
    """
    Data generating process of a simulation.

    Parameters:
    - family (str): gaussian, student-t, pareto or sde-drift.
    - mean (float): true mean; None draws a seeded uniform center on [-10, 10].
    - variance (float): target variance (gaussian, student-t) or the sigma^2 of the sde-drift noise.
    - df (float): degrees of freedom of student-t.
    - pareto_index (float): Pareto shape a > 1; samples are recentered by a / (a - 1).
    - damping (float): bound of |f| in the sde-drift volatility f(G, t) = damping * cos(G).
    - p, v (float): moment order and bound advertised to p-th moment estimators.
    - seed (int): root seed; replication r draws from the child stream (seed, r).
    """
    family: str = "gaussian"
    mean: Optional[float] = None
    variance: Optional[float] = 1.0
    df: float = 3.0
    pareto_index: float = 1.8
    damping: float = 1.0
    p: float = 2.0
    v: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown generator family '{self.family}', expected one of {FAMILIES}")
        if self.variance is not None and self.variance < 0.0:
            raise ConfigError(f"variance must be nonnegative, got {self.variance}")
        if self.family == "student-t":
            if self.df <= 1.0:
                raise ConfigError(f"student-t needs df > 1 for a mean, got {self.df}")
            if self.variance is not None and self.df <= 2.0:
                raise ConfigError(f"student-t with a variance target needs df > 2, got {self.df}")
        if self.family == "pareto":
            if self.pareto_index <= 1.0:
                raise ConfigError(f"pareto needs index a > 1, got {self.pareto_index}")
            if self.variance is not None:
                raise ConfigError("pareto takes no variance target, set variance=None and give (p, v)")
        if self.family == "sde-drift" and not 0.0 <= self.damping <= 1.0:
            raise ConfigError(f"sde-drift damping must lie in [0, 1], got {self.damping}")

    @property
    def true_mean(self) -> float:
        if self.mean is not None:
            return float(self.mean)
        rng = np.random.default_rng(np.random.SeedSequence(entropy=self.seed))
        return float(rng.uniform(*DEFAULT_CENTER_RANGE))

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance) if self.variance is not None else 1.0


def child_rng(seed: int, rep: int) -> np.random.Generator:
    """Generator of replication rep; independent of how replications are scheduled."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(rep,)))


def generate_with_bounds(spec: GeneratorSpec, n: int, rep: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """
    n observations of replication rep and their predictable conditional standard deviation bounds.

    For i.i.d. families the bound is the constant sigma of the GeneratorSpec.
    """
    rng = child_rng(spec.seed, rep)
    mu = spec.true_mean
    sigma = spec.sigma

    if spec.family == "gaussian":
        xs = mu + sigma * rng.standard_normal(n)
        return xs, np.full(n, sigma)

    if spec.family == "student-t":
        if spec.variance is not None:
            scale = sigma * math.sqrt((spec.df - 2.0) / spec.df)
        else:
            scale = 1.0
        xs = mu + scale * rng.standard_t(spec.df, size=n)
        return xs, np.full(n, sigma)

    if spec.family == "pareto":
        a = spec.pareto_index
        # numpy draws the Lomax form, shift by one for the classical Pareto on [1, inf)
        xs = mu + (1.0 + rng.pareto(a, size=n)) - a / (a - 1.0)
        return xs, np.full(n, math.nan)

    # sde-drift: unit-step Euler increments of dG = sigma f(G, t) dW + mu dt
    z = rng.standard_normal(n)
    xs = np.empty(n)
    bounds = np.empty(n)
    g = 0.0
    for i in range(n):
        f = spec.damping * math.cos(g)
        bounds[i] = sigma * abs(f)
        xs[i] = mu + sigma * f * z[i]
        g += xs[i]
    return xs, bounds


def generate(spec: GeneratorSpec, n: int, rep: int = 0) -> np.ndarray:
    return generate_with_bounds(spec, n, rep)[0]


if __name__ == '__main__':
    for family in FAMILIES:
        variance = None if family == "pareto" else 1.0
        spec = GeneratorSpec(family=family, variance=variance, seed=7)
        print(family, spec.true_mean, generate(spec, 5))
