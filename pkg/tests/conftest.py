import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sblattice.abelian import build_abelian  # noqa: E402
from sblattice.curve import point, validate_spec  # noqa: E402
from sblattice.solution import init_solution  # noqa: E402

GENUS1_BP = (1, 2, 3, 4)
GENUS2_BP = (1, 2, 3, 4, 5, 6)
UNIT_BP = tuple(np.exp(1j * s) for s in (0.5, -0.5, 2.0, -2.0))

ACCEPTANCE_LINES = {}


def record_acceptance(k, passed, detail):
    line = f"acceptance {k}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[k] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def genus1_spec():
    return validate_spec(GENUS1_BP)


@pytest.fixture(scope="session")
def genus1_stack(genus1_spec):
    return build_abelian(genus1_spec)


@pytest.fixture(scope="session")
def genus1_state(genus1_spec, genus1_stack):
    mu = [point(genus1_spec, 2.5 + 0.7j, 1)]
    return init_solution(genus1_spec, mu, 1.0, stack=genus1_stack)


@pytest.fixture(scope="session")
def genus2_spec():
    return validate_spec(GENUS2_BP)


@pytest.fixture(scope="session")
def genus2_stack(genus2_spec):
    return build_abelian(genus2_spec)


@pytest.fixture(scope="session")
def genus2_state(genus2_spec, genus2_stack):
    mu = [point(genus2_spec, 2.5 + 0.7j, 1), point(genus2_spec, 4.5 - 0.6j, -1)]
    return init_solution(genus2_spec, mu, 0.8 + 0.3j, stack=genus2_stack)


@pytest.fixture(scope="session")
def unit_spec():
    return validate_spec(UNIT_BP)


@pytest.fixture(scope="session")
def unit_state(unit_spec):
    return init_solution(unit_spec, [point(unit_spec, 0.3 + 0.2j, 1)], 1.0)
