import numpy as np
import pytest

from cs_core.config import CsConfig


@pytest.fixture
def unit_config() -> CsConfig:
    return CsConfig(alpha=0.05, sigma2=1.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240731)


@pytest.fixture
def gaussian_xs(rng) -> np.ndarray:
    return rng.standard_normal(300)
