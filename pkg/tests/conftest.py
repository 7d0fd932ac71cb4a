import pytest

from newton_measure import erf_problem
from newton_measure.roots import zero_scan


@pytest.fixture(scope="session")
def erf():
    return erf_problem(0.3)


@pytest.fixture(scope="session")
def erf0():
    return erf_problem(0.0)


@pytest.fixture(scope="session")
def erf_registry(erf):
    ks = [s * a for a in range(5, 21) for s in (1, -1)]
    rows, reg = zero_scan(erf, (1, 2), ks)
    return rows, reg


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS):
        ok, detail = RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {key}: {detail}")
