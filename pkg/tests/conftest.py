import re

ACCEPTANCE = {}
_PATTERN = re.compile(r"test_criterion_(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    m = _PATTERN.search(report.nodeid)
    if not m:
        return
    key = int(m.group(1))
    if report.when == "call" or report.outcome != "passed":
        prev = ACCEPTANCE.get(key, (m.group(2), "passed", 0.0))
        outcome = "failed" if "failed" in (prev[1], report.outcome) else report.outcome
        ACCEPTANCE[key] = (m.group(2), outcome, prev[2] + report.duration)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        name, outcome, secs = ACCEPTANCE[key]
        label = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        tr.write_line(f"criterion {key:2d}  {label}  {name.replace('_', ' ')}  ({secs:.1f}s)")
    passed = sum(v[1] == "passed" for v in ACCEPTANCE.values())
    tr.write_line(f"{passed}/{len(ACCEPTANCE)} acceptance criteria passed")
