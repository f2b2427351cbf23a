import json
import pathlib

import pytest

from anharm.model import OscillatorSpec, UnitSystem

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture
def harmonic_spec():
    return OscillatorSpec(units=UnitSystem(), order=2, intrinsic_coeffs={2: 0.5}, n_max=10)


@pytest.fixture
def cubic_spec():
    return OscillatorSpec(units=UnitSystem(), order=3, intrinsic_coeffs={2: 0.5, 3: -0.02}, n_max=5)


@pytest.fixture(scope="session")
def cubic_fixture():
    return json.loads((FIXTURES / "cubic_fixture.json").read_text())


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
