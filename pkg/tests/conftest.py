"""Collects outcomes of tests marked ``criterion`` and prints one line per criterion."""

import pytest

_outcomes: dict[str, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(key, title): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        key, title = marker.args
        entry = _outcomes.setdefault(key, {"title": title, "checks": []})
        entry["checks"].append((item.name, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_outcomes, key=lambda k: (not k[1:].isdigit(), int(k[1:]) if k[1:].isdigit() else 0, k)):
        entry = _outcomes[key]
        passed = sum(ok for _, ok in entry["checks"])
        total = len(entry["checks"])
        verdict = "PASS" if passed == total else "FAIL"
        terminalreporter.write_line(f"{verdict}  {key}  {entry['title']}  ({passed}/{total} checks)")
        for name, ok in entry["checks"]:
            if not ok:
                terminalreporter.write_line(f"        failed: {name}")
