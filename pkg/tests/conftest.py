"""Shared pytest hooks: print one PASS/FAIL line per acceptance criterion.

The acceptance suite (``test_acceptance.py``) exposes ``LABELS`` (criterion
number -> human label) and ``DETAILS`` (criterion number -> measured-values
string, recorded by each test as soon as its measurements exist, before the
asserts run).  After the run we merge those with the actual pytest outcomes
so the terminal summary shows one line per criterion even under ``-q``.
"""

import re
import sys

_NODE_RE = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mod = sys.modules.get("test_acceptance")
    if mod is None:
        return
    labels = getattr(mod, "LABELS", {})
    details = getattr(mod, "DETAILS", {})

    outcomes = {}
    for status, verdict in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(status, []):
            match = _NODE_RE.search(getattr(rep, "nodeid", ""))
            if match and (getattr(rep, "when", "call") == "call" or status == "error"):
                outcomes[match.group(1)] = verdict
    if not outcomes:
        return

    terminalreporter.section("acceptance criteria")
    for num in sorted(outcomes):
        line = f"{outcomes[num]}  criterion {num}  {labels.get(num, '')}"
        if num in details:
            line += f" -- {details[num]}"
        terminalreporter.write_line(line)
