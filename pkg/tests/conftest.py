"""Collects acceptance outcomes and prints one line per criterion at the end of the run."""

from collections import defaultdict

CRITERIA = {
    1: "quantum-model identities",
    2: "Bell violation point",
    3: "Bell region equals union of two Wigner regions",
    4: "linear system rank and reduction",
    5: "feasibility iff violation, spot values",
    6: "estimator inequality holds for all tables",
    7: "per-configuration normalization reproduces violation",
    8: "exhaustive simplex enumeration",
    9: "generalized signed-vector inequality",
    10: "detection-sum inequality",
    11: "hidden-variable reduction",
}

_results: dict[int, list[tuple[str, str]]] = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        outcome = "passed" if call.excinfo is None else "failed"
        _results[marker.args[0]].append((item.name, outcome))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number, title in CRITERIA.items():
        runs = _results.get(number)
        if not runs:
            terminalreporter.write_line(f"C{number:<2} NOT RUN  {title}")
            continue
        failed = [name for name, outcome in runs if outcome != "passed"]
        status = "FAIL" if failed else "PASS"
        detail = f"  (failed: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"C{number:<2} {status}     {title}{detail}")
