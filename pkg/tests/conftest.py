import numpy as np
import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion."""

    class Recorder:
        def __init__(self):
            self.entries = []

        def __call__(self, number, title, passed, detail=""):
            line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}"
            if detail:
                line += f" ({detail})"
            ACCEPTANCE_LINES.append(line)
            print(line)
            return passed

    return Recorder()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
