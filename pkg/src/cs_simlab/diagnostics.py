import math

import numpy as np
from scipy import integrate
from scipy.stats import norm

from cs_catoni.influence import InfluenceFn
from cs_core.errors import ConfigError


def supermartingale_increment_mean(kind: str, lam: float, sigma2: float = 1.0, p: float = 2.0) -> float:
    """
    E[one-step factor] for X ~ N(mu, sigma2), by quadrature (mu = 0 without loss of generality).

    kind "catoni": exp(phi(lam X) - lam^2 sigma2 / 2)
    kind "catoni-minus": exp(phi(-lam X) - lam^2 sigma2 / 2)
    kind "self-normalized": exp(lam X - lam^2 (X^2 + 2 sigma2) / 6)
    """
    sigma = math.sqrt(sigma2)
    influence = InfluenceFn(p=p)
    if kind == "catoni":
        def factor(x):
            return math.exp(influence(lam * x) - lam * lam * sigma2 / 2.0)
    elif kind == "catoni-minus":
        def factor(x):
            return math.exp(influence(-lam * x) - lam * lam * sigma2 / 2.0)
    elif kind == "self-normalized":
        def factor(x):
            return math.exp(lam * x - lam * lam * (x * x + 2.0 * sigma2) / 6.0)
    else:
        raise ConfigError(f"unknown supermartingale kind '{kind}'")

    value, _ = integrate.quad(lambda x: factor(x) * norm.pdf(x, scale=sigma), -np.inf, np.inf,
                              epsabs=1e-12, epsrel=1e-10, limit=200)
    return value


def pareto_central_moment(a: float, p: float) -> float:
    """E|X - mu|^p for the classical Pareto(a) on [1, inf), mu = a / (a - 1)."""
    if a <= p:
        return math.inf
    mu = a / (a - 1.0)

    def integrand(x):
        return abs(x - mu) ** p * a * x ** (-a - 1.0)

    # the kink at mu is split out for quad
    head, _ = integrate.quad(integrand, 1.0, mu)
    tail, _ = integrate.quad(integrand, mu, np.inf, limit=200)
    return head + tail
