import numpy as np
import pytest

from gyrostab.gyrostat import GyrostatParams


@pytest.fixture
def ref():
    """I = diag(3, 2, 1), mu = (1, 0, 0)."""
    return GyrostatParams(3.0, 2.0, 1.0, (1.0, 0.0, 0.0))


@pytest.fixture(params=[1, 2, 3], ids=["axis1", "axis2", "axis3"])
def axis_params(request):
    return GyrostatParams.on_axis((3.0, 2.0, 1.0), request.param, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
