import numpy as np
import pytest

from hodgelab import MetricField, SampleGrid


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def flat():
    return MetricField.flat()


@pytest.fixture(scope="session")
def bumpy():
    return MetricField.random(np.random.default_rng(7), 1, 0.15)


@pytest.fixture(scope="session")
def grid2():
    return SampleGrid.for_truncation(2)


def pytest_terminal_summary(terminalreporter):
    from verdicts import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
