import re

_CRITERIA = {}


def pytest_runtest_logreport(report):
    match = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not match:
        return
    number = int(match.group(1))
    if report.when == "call" or report.outcome != "passed":
        previous = _CRITERIA.get(number, (match.group(2), "PASS"))[1]
        outcome = "PASS" if report.outcome == "passed" and previous == "PASS" else "FAIL"
        _CRITERIA[number] = (match.group(2), outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        name, outcome = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number} ({name}): {outcome}")
