import pytest

_CRITERIA: list[tuple[str, str]] = []


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    label = getattr(report, "criterion", None)
    if label is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA.append((label, "PASS" if report.outcome == "passed" else "FAIL"))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, verdict in _CRITERIA:
        terminalreporter.write_line(f"{verdict}  {label}")
