import numpy as np
import pytest

from caplab.optimize import OptimizerConfig


def h2(p):
    """Binary entropy in bits, the analytic oracle for two-outcome spectra."""
    p = np.asarray(p, dtype=float)
    q = 1 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = -np.where(p > 0, p * np.log2(p), 0.0) - np.where(q > 0, q * np.log2(q), 0.0)
    return terms


@pytest.fixture
def fast_config():
    return OptimizerConfig(restarts=4, seed=3)
