import pytest

from gordonflow.ceiling import build_ceiling, constant_ceiling
from gordonflow.cfrac import cubic_schedule, design_pair
from gordonflow.flow import FlowMap

DESK_SMALL_SEEDS = ((0, 5), (0,))


@pytest.fixture(scope="session")
def pair():
    return design_pair(cubic_schedule(), 2, DESK_SMALL_SEEDS)


@pytest.fixture(scope="session")
def ceiling(pair):
    return build_ceiling(pair, "poly", 32)


@pytest.fixture(scope="session")
def flow(pair, ceiling):
    return FlowMap(pair, ceiling)


@pytest.fixture(scope="session")
def flat(pair):
    return FlowMap(pair, constant_ceiling())


# acceptance results: criterion -> (passed, seconds, detail)
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, secs, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  ({secs:.1f}s)  {detail}")
