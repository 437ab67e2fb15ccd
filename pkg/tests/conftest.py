import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from kofilter import Equicorrelated, build_knockoffs, normalize_columns


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def make_design(n, p, rng, rho=0.0):
    """Unit-column design with AR(1)-correlated columns (test helper)."""
    z = rng.standard_normal((n, p))
    if rho:
        for j in range(1, p):
            z[:, j] = rho * z[:, j - 1] + np.sqrt(1 - rho * rho) * z[:, j]
    return normalize_columns(z)


@pytest.fixture
def small_model(rng):
    x = make_design(60, 10, rng)
    return build_knockoffs(x, Equicorrelated(1.0))
