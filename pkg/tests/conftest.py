import numpy as np
import pytest

from diskembed import geometry


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


SPACES = {
    "euclidean": geometry.QuasiMetricSpace.euclidean(3),
    "polyhedral": geometry.QuasiMetricSpace.simplex(3),
    "sphere": geometry.QuasiMetricSpace.sphere(3),
    "lorentz": geometry.QuasiMetricSpace.lorentz(3),
}


@pytest.fixture(params=sorted(SPACES))
def space(request):
    return SPACES[request.param]


@pytest.fixture(params=["euclidean", "sphere", "lorentz"])
def metric_space(request):
    return SPACES[request.param]


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: (int(k.split()[0].rstrip("abcd")), k)):
        terminalreporter.write_line(RESULTS[key])
