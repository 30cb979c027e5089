"""The committed demo case files must stay in sync with the fixture builders."""
from pathlib import Path

import pytest

from gridlocus.fixtures import (
    NINE_BUS_MATPOWER,
    sixteen_bus_active_disturbance,
    sixteen_bus_base,
    sixteen_bus_reactive_disturbance,
    two_bus_case,
)
from gridlocus.network import serialize_case

CASES_DIR = Path(__file__).resolve().parents[1] / "cases"


@pytest.mark.parametrize(
    "filename, builder",
    [
        ("two_bus.json", two_bus_case),
        ("sixteen_bus_base.json", sixteen_bus_base),
        ("sixteen_bus_active_infeasible.json", sixteen_bus_active_disturbance),
        ("sixteen_bus_reactive_infeasible.json", sixteen_bus_reactive_disturbance),
    ],
)
def test_json_cases_match_builders(filename, builder):
    assert (CASES_DIR / filename).read_text() == serialize_case(builder())


def test_matpower_case_matches_builder():
    assert (CASES_DIR / "nine_bus.m").read_text() == NINE_BUS_MATPOWER
