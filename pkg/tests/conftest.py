"""Collects acceptance-criterion outcomes and prints one line per criterion."""

RESULTS = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    crit = props.get("criterion")
    if crit is None:
        return
    if report.when == "call" or (report.failed and crit not in RESULTS):
        RESULTS[crit] = (report.passed, props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(RESULTS):
        ok, detail = RESULTS[crit]
        terminalreporter.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}  {detail}")
