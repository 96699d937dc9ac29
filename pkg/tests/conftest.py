"""Per-criterion PASS/FAIL summary for the acceptance suite."""

import pytest

_outcomes: dict[int, bool] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n = mark.args[0]
    if report.when == "call":
        _outcomes[n] = _outcomes.get(n, True) and report.passed
    elif report.failed or report.skipped:
        _outcomes[n] = False


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        terminalreporter.write_line(f"Criterion {n}: {'PASS' if _outcomes[n] else 'FAIL'}")
