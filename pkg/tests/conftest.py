"""Collects acceptance-criterion results and prints one PASS/FAIL line per criterion."""

import pytest

_results: dict[str, bool] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    title = getattr(report, "criterion", None)
    if title is None:
        return
    ok = report.passed if report.when == "call" else not report.failed
    # a criterion may span several tests; it passes only if all of them do
    _results[title] = _results.get(title, True) and ok


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        report.criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for title, ok in sorted(_results.items()):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {title}")
