import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gridcompute import RotationTask, canonical_grid, compile_program  # noqa: E402
from gridcompute.grid_model import DerSpec, GridSpec  # noqa: E402


@pytest.fixture
def grid():
    return canonical_grid()


@pytest.fixture
def cw_program(grid):
    return compile_program(grid, RotationTask("clockwise").weight_task())


@pytest.fixture
def ccw_program(grid):
    return compile_program(grid, RotationTask("counterclockwise").weight_task())


@pytest.fixture
def uniform_grid():
    der = DerSpec(v_ref=315.0, r_droop=0.1, r_line=0.5, r_load=99.0)
    return GridSpec((der,) * 4, der)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_line():
    """Record one PASS/FAIL line; lines are echoed in the terminal summary."""

    def record(name, passed, detail):
        _ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        print(_ACCEPTANCE_LINES[-1])
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
