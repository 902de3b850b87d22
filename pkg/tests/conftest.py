import numpy as np
import pytest

from potforecast.estimators import extract_excesses
from potforecast.gpd import GpParams, gp_sample

# Fitted values quoted for the Milan daily maximum temperature series (n=3140, k=169, t=34)
MILAN_ML = GpParams(1.65, -0.34)
MILAN_GPWM = GpParams(1.59, -0.29)
MILAN_T = 34.0
MILAN_K = 169
MILAN_N = 3140


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def gp_excess_data(sigma, gamma, k, seed, n_factor=10):
    """Sample of size ``n_factor * k`` whose top ``k`` excesses are exactly GP.

    Draws the excesses directly and pads the sample with values below zero,
    so the threshold is 0 and the excesses follow ``GP(sigma, gamma)``.
    """
    ex = gp_sample(GpParams(sigma, gamma), k, seed)
    filler = -np.arange(1, (n_factor - 1) * k + 1, dtype=float)
    return extract_excesses(np.concatenate([ex, filler, [0.0]]), k)


@pytest.fixture
def exact_gp_data():
    return gp_excess_data(1.0, 0.2, 2000, seed=5)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
