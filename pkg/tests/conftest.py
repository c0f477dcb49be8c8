import numpy as np
import pytest

from gridmdp import default_grid, default_scenario
from gridmdp.grid import parse_grid

TWO_BUS_DOC = """
{
  "base_mva": 100.0,
  "substations": [{"id": "A"}, {"id": "B"}],
  "lines": [
    {"id": "LAB", "from": "A", "to": "B", "x_pu": 0.1, "r_pu": 0.01, "thermal_limit_mw": 50.0}
  ],
  "generators": [
    {"id": "G1", "sub": "A", "type": "thermal", "p_max": 100.0, "p_min": 0.0,
     "ramp_mw_per_step": 100.0, "marginal_cost": 40.0}
  ],
  "loads": [{"id": "D1", "sub": "B"}],
  "storages": []
}
"""


@pytest.fixture(scope="session")
def grid():
    return default_grid()


@pytest.fixture(scope="session")
def week_scenario():
    """The default 7-day scenario (seed 42), safe for the do-nothing agent."""
    return default_scenario(days=7, seed=42)


@pytest.fixture(scope="session")
def day_scenario():
    return default_scenario(days=1, seed=42)


@pytest.fixture()
def two_bus_grid():
    return parse_grid(TWO_BUS_DOC)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
