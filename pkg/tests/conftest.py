import numpy as np
import pytest

from impnet import HistoryFunction, NetworkSpec, simulate, simulate_transformed
from impnet.fixtures import load_fixture

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session", autouse=True)
def warm_jit():
    """Load (or compile) the integrator once so timings exclude JIT start-up."""
    spec = NetworkSpec.build([1.0], B=[[0.5]], C=[[0.5]])
    simulate(spec, HistoryFunction.constant(1.0, 1), 0.01)
    simulate_transformed(spec, HistoryFunction.constant(1.0, 1), 0.01)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_neuron():
    return load_fixture("two-neuron")[0]


@pytest.fixture
def f_impulsive():
    return load_fixture("f-impulsive")[0]


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
