import functools

import pytest

from painleve_xx import fixtures as fx

ACCEPTANCE_TITLES = {
    1: "conservation of C on the lifted fixtures",
    2: "squared PII0 fixture satisfies XX through its zero",
    3: "structure of every detected XX zero",
    4: "signed root reproduces the PII0 fixture",
    5: "positive root of the squared fixture is rejected",
    6: "negative-branch residual",
    7: "adaptive integrator vs Richardson oracle",
    8: "degenerate data and the trivial solution",
}
ACCEPTANCE_RESULTS = {}


@functools.lru_cache(maxsize=None)
def run_fixture(name):
    return fx.BY_NAME[name].run()


@pytest.fixture(scope="session")
def run():
    """Trajectory of a named fixture at default tolerances, integrated once per session."""
    return lambda name: run_fixture(name)[0]


@pytest.fixture
def criterion():
    def record(number, passed, detail):
        ACCEPTANCE_RESULTS[number] = (bool(passed), detail)
        print(f"criterion {number} {'PASS' if passed else 'FAIL'}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n, title in ACCEPTANCE_TITLES.items():
        if n in ACCEPTANCE_RESULTS:
            passed, detail = ACCEPTANCE_RESULTS[n]
            status = "PASS" if passed else "FAIL"
        else:
            status, detail = "NOT RUN", ""
        terminalreporter.write_line(f"[{status}] {n}. {title}: {detail}")
