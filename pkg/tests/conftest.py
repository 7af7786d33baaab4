"""Per-criterion summary for the acceptance suite.

Tests marked ``@pytest.mark.criterion(n, "title")`` are grouped by n and a
single pass/fail line per criterion is printed at the end of the run.
"""
from collections import OrderedDict

import pytest

_TITLES = {}
_OUTCOMES = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion the test belongs to")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            n = mark.args[0]
            _TITLES.setdefault(n, mark.args[1] if len(mark.args) > 1 else "")
            _OUTCOMES.setdefault(n, [])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _OUTCOMES[mark.args[0]].append((rep.passed, item.name, rep.duration))


def pytest_terminal_summary(terminalreporter):
    ran = {n: r for n, r in _OUTCOMES.items() if r}
    if not ran:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ran):
        results = ran[n]
        ok = all(p for p, _, _ in results)
        secs = sum(d for _, _, d in results)
        failed = [name for p, name, _ in results if not p]
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {_TITLES[n]}  ({len(results)} test(s), {secs:.1f}s)"
        if failed:
            line += "  failing: " + ", ".join(failed)
        tr.write_line(line)
