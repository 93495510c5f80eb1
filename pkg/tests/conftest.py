import time

import pytest

_RESULTS_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS_KEY] = []


class AcceptanceRecorder:
    """Times one acceptance criterion and records a single pass/fail line."""

    def __init__(self, results: list):
        self._results = results
        self._start = time.perf_counter()

    def elapsed(self) -> float:
        return time.perf_counter() - self._start

    def check(self, number: int, name: str, passed: bool, detail: str, budget: float) -> None:
        elapsed = self.elapsed()
        in_budget = elapsed <= budget
        ok = bool(passed) and in_budget
        line = (f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}  "
                f"[{elapsed:.2f}s / budget {budget:g}s]")
        self._results.append((number, line))
        print(line)
        assert passed, line
        assert in_budget, f"over the runtime budget: {line}"


@pytest.fixture
def acceptance(request):
    return AcceptanceRecorder(request.config.stash[_RESULTS_KEY])


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS_KEY, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(results):
        terminalreporter.write_line(line)
