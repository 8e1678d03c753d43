import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qiia.fixtures import bundled_integrals, data_text  # noqa: E402
from qiia.hamiltonian import build_qubit_hamiltonian  # noqa: E402
from qiia.simulator import parse_state  # noqa: E402

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "qiia" / "data"

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def bundled():
    return bundled_integrals()


@pytest.fixture(scope="session")
def bundled_h(bundled):
    return build_qubit_hamiltonian(bundled)


@pytest.fixture(scope="session")
def b_plus_8q_state():
    with pytest.warns(UserWarning):
        return parse_state(data_text("b_plus_2e8q.state"))


@pytest.fixture(scope="session")
def b_plus_10q_state():
    return parse_state(data_text("b_plus_4e10q.state"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
