import os
import sys

from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=60)
settings.load_profile("repo")

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}
_OUTCOMES = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" in report.nodeid and report.when == "call":
        _OUTCOMES[report.nodeid] = report.outcome
    elif "test_acceptance.py::test_criterion_" in report.nodeid and report.failed:
        _OUTCOMES[report.nodeid] = "failed"


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_OUTCOMES, key=lambda s: int(s.split("test_criterion_")[1][:2])):
        num = int(nodeid.split("test_criterion_")[1][:2])
        ok = _OUTCOMES[nodeid] == "passed"
        detail = ACCEPTANCE.get(num, (None, "no measurement recorded"))[1]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
