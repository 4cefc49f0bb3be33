import numpy as np
import pytest

from ncthom.pseudodiff import build_chi


@pytest.fixture(scope="session")
def chi():
    return build_chi()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def expansion():
    from ncthom.suites import expansion_defects
    return expansion_defects()


ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def verdict(request):
    """Record one acceptance line; the lines are printed in the terminal summary."""
    log = request.config.stash[ACCEPTANCE]

    def record(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        log.append((number, line))
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(ACCEPTANCE, [])
    if not log:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for _, line in sorted(log):
        terminalreporter.write_line(line)
