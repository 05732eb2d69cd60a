import pytest

_results: dict[int, dict] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m is not None:
            number, title = m.args
            _results.setdefault(number, {"title": title, "passed": 0, "failed": 0, "tests": []})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is None or rep.when not in ("setup", "call"):
        return
    entry = _results[m.args[0]]
    if rep.failed:
        entry["failed"] += 1
        entry["tests"].append(item.name)
    elif rep.when == "call" and rep.passed:
        entry["passed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        e = _results[number]
        if e["failed"]:
            verdict = "FAIL"
        elif e["passed"]:
            verdict = "PASS"
        else:
            verdict = "NOT RUN"
        line = f"AC{number} {verdict}: {e['title']}"
        if e["failed"]:
            line += f"  (failing: {', '.join(e['tests'])})"
        terminalreporter.write_line(line)
