"""Per-criterion PASS/FAIL summary for the acceptance suite."""

from collections import defaultdict

_NODES = {}
_TITLES = {}
_RESULTS = defaultdict(list)


def pytest_runtest_setup(item):
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        number, title = marker.args
        _NODES[item.nodeid] = number
        _TITLES[number] = title


def pytest_runtest_logreport(report):
    number = _NODES.get(report.nodeid)
    if number is None:
        return
    # a failing fixture shows up as a setup failure and counts against the criterion
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _RESULTS[number].append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _TITLES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_TITLES):
        runs = _RESULTS.get(number, [])
        status = "PASS" if runs and all(runs) else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {_TITLES[number]}")
