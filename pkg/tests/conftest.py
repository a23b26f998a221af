import os

import pytest
from hypothesis import HealthCheck, settings

from mmse_poly import dist as D
from mmse_poly.quadrature import QuadConfig

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

CLASS_D = ("two-point", "uniform", "triangular", "coswindow")


@pytest.fixture(scope="session")
def double_cfg():
    return QuadConfig(precision="double")


@pytest.fixture(scope="session")
def extended_cfg():
    return QuadConfig(precision="extended")


@pytest.fixture(params=CLASS_D)
def class_d_dist(request):
    return D.PRESETS[request.param]()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
