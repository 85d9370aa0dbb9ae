"""Acceptance reporting: one PASS/FAIL line per numbered criterion."""

from collections import OrderedDict

_RESULTS = OrderedDict()


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        _RESULTS.setdefault(n, []).append((item.name, title, call.excinfo is None))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_RESULTS):
        checks = _RESULTS[n]
        ok = all(p for _, _, p in checks)
        tr.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}")
        for name, title, p in checks:
            tr.write_line(f"    [{'pass' if p else 'FAIL'}] {title} ({name})")
