import numpy as np
import pytest

from specgp.indices import LANDSAT, MODIS


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=[LANDSAT, MODIS], ids=["landsat", "modis"])
def schema(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
