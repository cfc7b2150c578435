import numpy as np
import pytest

_criteria: dict[int, list[bool]] = {}
_titles: dict[int, str] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    n, title = marker.args
    _titles[n] = title
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _criteria.setdefault(n, []).append(rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_criteria):
        status = "PASS" if all(_criteria[n]) else "FAIL"
        tr.write_line(f"criterion {n:2d} {status}  {_titles[n]}")


@pytest.fixture
def ferromagnet():
    from boltzbench.ising import IsingModel

    return IsingModel(2, [0.0, 0.0], {(0, 1): -1.0})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
