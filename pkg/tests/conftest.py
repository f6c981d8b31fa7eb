import numpy as np
import pytest

from densridge.experiments import Scenario, generate
from densridge.kde import KdeModel, Sample, silverman_bandwidth


@pytest.fixture(scope="session")
def circle_sample():
    return generate(Scenario.defaults("circle", n=500))


@pytest.fixture(scope="session")
def circle_model(circle_sample):
    return KdeModel(circle_sample, silverman_bandwidth(circle_sample))


def random_sample(rng, n, d, scale=1.0):
    return Sample(rng.normal(scale=scale, size=(n, d)))


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[key])
