import pytest

from lorasim.config import SimConfig


@pytest.fixture
def small_cfg():
    """A few hundred devices for a couple of simulated hours: fast but busy."""
    return SimConfig().with_overrides({
        "scenario.n_devices": 300,
        "scenario.aggregate_lambda": 0.5,
        "scenario.confirmed_fraction": 0.5,
        "scenario.sim_duration": 3600.0,
        "scenario.drain": 600.0,
    })
