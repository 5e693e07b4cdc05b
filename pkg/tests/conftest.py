import itertools

import numpy as np
import pytest

from ghzw.qsim import Behavior


def pr_box(alpha=0, beta=0, gamma=0) -> Behavior:
    """Two-party box with a XOR b = xy + alpha x + beta y + gamma (mod 2)."""
    t = np.zeros((2, 2, 2, 2))
    for x, y, a, b in itertools.product(range(2), repeat=4):
        if (a ^ b) == (x * y + alpha * x + beta * y + gamma) % 2:
            t[x, y, a, b] = 0.5
    return Behavior((2, 2), t)


@pytest.fixture(scope="session")
def hexagon():
    from ghzw.inflation import Scenario, build_constraint_system, ring_inflation
    s = Scenario(3, (2, 2, 2))
    return build_constraint_system(ring_inflation(s, 2), s)


@pytest.fixture(scope="session")
def bell_ring():
    from ghzw.inflation import Scenario, build_constraint_system, ring_inflation
    s = Scenario(2, (2, 2))
    return build_constraint_system(ring_inflation(s, 2), s)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, checks: list[tuple[str, bool, str]]) -> None:
    """Print one PASS/FAIL line for a criterion, keep it for the terminal
    summary, then fail the test if any check failed."""
    ok = all(passed for _, passed, _ in checks)
    failed = [f"{name} ({detail})" for name, passed, detail in checks if not passed]
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}"
    if failed:
        line += " | failing: " + "; ".join(failed)
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
