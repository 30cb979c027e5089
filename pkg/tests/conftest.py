import pytest

from gridlocus.fixtures import (
    sixteen_bus_active_disturbance,
    sixteen_bus_base,
    sixteen_bus_reactive_disturbance,
    two_bus_case,
)
from gridlocus.network import serialize_case


@pytest.fixture
def two_bus():
    return two_bus_case()


@pytest.fixture
def ring16_base():
    return sixteen_bus_base()


@pytest.fixture
def ring16_active():
    return sixteen_bus_active_disturbance()


@pytest.fixture
def ring16_reactive():
    return sixteen_bus_reactive_disturbance()


@pytest.fixture
def case_file(tmp_path):
    """Write a GridCase to a temp file, return the path."""

    def write(case, name="case.json"):
        path = tmp_path / name
        path.write_text(serialize_case(case))
        return str(path)

    return write


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdict lines where capture cannot hide them."""
    try:
        from .test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status in sorted(RESULTS):
        terminalreporter.write_line(f"{status}  #{number:2d}  {title}")
