import numpy as np
import pytest

from optstirap.dynamics import ProblemSpec


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    RESULTS = getattr(mod, "RESULTS", None)
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[key])


@pytest.fixture(scope="session")
def shooting_t20():
    from optstirap import shooting
    return shooting.solve(ProblemSpec(0.1, 20.0, 1.0))


@pytest.fixture(scope="session")
def shooting_t20_unbounded():
    from optstirap import shooting
    return shooting.solve(ProblemSpec(0.1, 20.0))


@pytest.fixture(scope="session")
def direct_t20():
    from optstirap import direct
    return direct.optimize(ProblemSpec(0.1, 20.0, 1.0), 400)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
