import pytest

from weightapprox import Interval

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion checked by the test")


@pytest.fixture
def sym():
    return Interval(-1.0, 1.0)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    marker = _criteria.get(report.nodeid)
    if marker is not None:
        n, title = marker
        _criteria[report.nodeid] = (n, title, report.passed)


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _criteria[item.nodeid] = tuple(m.args)


def pytest_terminal_summary(terminalreporter):
    done = sorted(v for v in _criteria.values() if len(v) == 3)
    if not done:
        return
    terminalreporter.section("acceptance criteria")
    for n, title, ok in done:
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}")
