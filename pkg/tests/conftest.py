from __future__ import annotations

import pytest

_results: dict[int, dict] = {}


def _entry(item) -> dict | None:
    marker = item.get_closest_marker("acceptance")
    if marker is None or not marker.args:
        return None
    number, title = marker.args
    return _results.setdefault(number, {"title": title, "passed": True, "notes": []})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    entry = _entry(item)
    if entry is not None and (report.when == "call" or report.failed):
        entry["passed"] = entry["passed"] and report.passed


@pytest.fixture
def acceptance_note(request):
    """Attach a measured value to the criterion's summary line."""
    entry = _entry(request.node)

    def note(text: str) -> None:
        if entry is not None:
            entry["notes"].append(text)

    return note


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        entry = _results[number]
        status = "PASS" if entry["passed"] else "FAIL"
        notes = f"  ({'; '.join(entry['notes'])})" if entry["notes"] else ""
        terminalreporter.write_line(f"criterion {number}: {status}  {entry['title']}{notes}")
