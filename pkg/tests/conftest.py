from __future__ import annotations

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_hermitian(g: np.random.Generator, n: int = 4) -> np.ndarray:
    a = g.normal(size=(n, n)) + 1j * g.normal(size=(n, n))
    return (a + a.conj().T) / 2


def random_ket(g: np.random.Generator) -> np.ndarray:
    v = g.normal(size=4) + 1j * g.normal(size=4)
    return v / np.linalg.norm(v)


# -- acceptance reporting ---------------------------------------------------------------
# Each acceptance criterion records one line here; the lines are printed as a block at the
# end of the session (and immediately, for runs with -s).

ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
        passed = sum(line.startswith("[PASS]") for line in ACCEPTANCE_LINES.values())
        terminalreporter.write_line(f"{passed}/{len(ACCEPTANCE_LINES)} criteria passed")
