import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ngrayleigh.discretization import GridSpec  # noqa: E402
from ngrayleigh.fibering import Exponents, NormTuple  # noqa: E402


@pytest.fixture
def ex():
    return Exponents(1.5, 1.75, 3.0)


@pytest.fixture
def ones():
    return NormTuple(1.0, 1.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def worked_ex():
    return Exponents(1.5, 1.75, 3.0)


@pytest.fixture(scope="session")
def grid256():
    return GridSpec.interval(256)


@pytest.fixture(scope="session")
def mu_extremals(worked_ex, grid256):
    """The four mu extremal values and minimizers at lambda = 0.1 on (0, 1)."""
    from ngrayleigh.extremal import MU_KINDS, minimize_mu
    return {k: minimize_mu(k, 0.1, grid256, worked_ex) for k in MU_KINDS}


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance lines recorded by the acceptance tests."""
    reports = terminalreporter.stats.get("passed", []) + terminalreporter.stats.get("failed", [])
    lines = [v for r in reports for k, v in getattr(r, "user_properties", []) if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
