import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

import pytest


@pytest.fixture
def acceptance(request):
    """``record(criterion, part, ok, detail)``; lines are summarised at the end of the run."""
    store = request.config.__dict__.setdefault("_acceptance", [])

    def record(criterion: int, part: str, ok: bool, detail: str) -> bool:
        store.append((criterion, part, bool(ok), detail))
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.__dict__.get("_acceptance")
    if not store:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    by: dict[int, list] = {}
    for c, part, ok, detail in store:
        by.setdefault(c, []).append((part, ok, detail))
    for c in sorted(by):
        parts = by[c]
        primary = [p for p in parts if not p[0].startswith("stretch")]
        ok = all(p[1] for p in primary)
        tr.write_line(f"criterion {c}: {'PASS' if ok else 'FAIL'}")
        for part, pok, detail in parts:
            tr.write_line(f"    {part}: {'pass' if pok else 'fail'} - {detail}")
