from collections import defaultdict

import pytest

_results: dict[int, list[tuple[str, str]]] = defaultdict(list)
_details: dict[int, list[str]] = defaultdict(list)
_titles: dict[int, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    _titles[number] = title
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _results[number].append((item.name, report.outcome))
        _details[number].extend(f"{k}={v}" for k, v in report.user_properties)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        outcomes = _results[number]
        ok = all(o == "passed" for _, o in outcomes)
        failed = [name for name, o in outcomes if o != "passed"]
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {_titles[number]}"
        if failed:
            line += f"  (failing: {', '.join(failed)})"
        terminalreporter.write_line(line)
        if _details[number]:
            terminalreporter.write_line("    " + ", ".join(_details[number]))
