"""Shared test configuration.

Tests marked ``@pytest.mark.acceptance(number, title)`` are collected into
a per-criterion verdict.  A criterion passes only when every test carrying
its number passes; the verdicts are printed as one PASS/FAIL line each at
the end of the run, followed by the measurements each test recorded with
``record_property("measured", ...)``.
"""

from collections import OrderedDict

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, derandomize=True)
settings.load_profile("default")

_VERDICTS = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    entry = _VERDICTS.setdefault(number, {"title": title, "ok": True, "seen": False, "notes": [],
                                          "details": []})
    if report.when == "call" or (report.when == "setup" and not report.passed):
        entry["seen"] = True
        entry["details"].extend(v for k, v in item.user_properties if k == "measured")
        if not report.passed:
            entry["ok"] = False
            entry["notes"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        entry = _VERDICTS[number]
        if not entry["seen"]:
            continue
        verdict = "PASS" if entry["ok"] else "FAIL"
        extra = f"  (failing: {', '.join(entry['notes'])})" if entry["notes"] else ""
        terminalreporter.write_line(f"{verdict}  criterion {number:2d}: {entry['title']}{extra}")
        for detail in entry["details"]:
            terminalreporter.write_line(f"        {detail}")
