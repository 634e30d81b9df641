import math

import pytest

from chernlab.lattice import SQRT3, build_geometry
from chernlab.model import HaldaneParams

CYAN = HaldaneParams(1.0, 0.25, math.pi / 2, 0.0)
ORANGE = HaldaneParams(1.0, 0.25, -math.pi / 2, 0.0)
TRIVIAL = HaldaneParams(1.0, 0.25, 0.0, -3 * SQRT3)  # analytic explicit gauge everywhere
TRIVIAL_M1 = HaldaneParams(1.0, 0.25, 0.0, 1.0)
TRIVIAL_UPPER = HaldaneParams(1.0, 0.25, math.pi / 2, 2 * 3 * SQRT3 / 4)
CANONICAL = {"cyan": CYAN, "orange": ORANGE, "trivial": TRIVIAL}


@pytest.fixture(scope="session")
def geom():
    return build_geometry(1.0)


ACCEPTANCE_LINES = []


@pytest.hookimpl(hookwrapper=True, tryfirst=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    setattr(item, "rep_" + rep.when, rep)


class _Criterion:
    def __init__(self, number, title):
        self.number, self.title, self.details = number, title, []

    def note(self, text):
        self.details.append(text)


@pytest.fixture
def criterion(request, pytestconfig):
    """Collects details for one acceptance criterion; prints its PASS/FAIL line at teardown."""
    marker = request.node.get_closest_marker("criterion")
    crit = _Criterion(*marker.args)
    yield crit
    rep = getattr(request.node, "rep_call", None)
    status = "PASS" if rep is not None and rep.passed else "FAIL"
    line = f"{status} criterion {crit.number:2d} ({crit.title}): " + "; ".join(crit.details)
    ACCEPTANCE_LINES.append(line)
    capman = pytestconfig.pluginmanager.getplugin("capturemanager")
    with capman.global_and_fixture_disabled():
        print("\n" + line, flush=True)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
