import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sdla.analysis import solve_ne
from sdla.channel import ChannelDistribution, NetworkConfig
from sdla.rng import stream
from sdla.scenario import scenario_preset

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def two_user():
    """N=2, K=1 weak-coupling instance: unit direct gains, 0.1 cross gains."""
    cfg = NetworkConfig.build(2, 1, 1.0, 1.0)
    dist = ChannelDistribution.from_shorthand(2, 1, 1.0, 0.1, 0.0)
    return cfg, dist


@pytest.fixture(scope="session")
def weak():
    return scenario_preset("weak")


@pytest.fixture(scope="session")
def weak_ne(weak):
    return solve_ne(weak.cfg, weak.dist, "saa", n_samples=2000, rng=stream(0, "oracle"))


@pytest.fixture(scope="session")
def strong():
    return scenario_preset("strong")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
