"""Shared pytest wiring: the acceptance criteria report.

Acceptance tests register one line per criterion through the `criteria`
fixture; a terminal-summary hook prints them all (pass or fail) at the end
of the run.
"""

import pytest

_RESULTS: list[tuple[str, str, str]] = []


class CriteriaRecorder:
    def record(self, cid: str, passed: bool, detail: str = "") -> None:
        _RESULTS.append((cid, "PASS" if passed else "FAIL", detail))

    def check(self, cid: str, passed: bool, detail: str = "") -> None:
        """Record and assert in one step."""
        self.record(cid, bool(passed), detail)
        assert passed, f"{cid}: {detail}"


@pytest.fixture(scope="session")
def criteria() -> CriteriaRecorder:
    return CriteriaRecorder()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    order = {}
    for cid, status, detail in _RESULTS:
        order.setdefault(cid, (status, detail))
    for cid, (status, detail) in sorted(order.items()):
        line = f"{cid}: {status}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
