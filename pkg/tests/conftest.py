import pytest
from prefect.testing.utilities import prefect_test_harness

from src.contact_mcm.driver import RadialDriver, run_loop
from src.contact_mcm.geometry import ContactAngle
from src.contact_mcm.grid import LENS
from src.contact_mcm.radial import RadialConfig
from src.contact_mcm.seed import catenoid_seed, lens_profile, radial_seed


@pytest.fixture(scope="session")
def prefect_harness():
    with prefect_test_harness():
        yield


@pytest.fixture
def half_angle():
    return ContactAngle(0.5)


@pytest.fixture
def lens_seed(half_angle):
    return radial_seed(lens_profile(half_angle), 32)


@pytest.fixture
def catenoid(half_angle):
    state, outer = catenoid_seed(half_angle, 41)
    return state, outer


@pytest.fixture(scope="session")
def lens_trace():
    """Short lens run with two probe snapshots and a record every step."""
    angle = ContactAngle(0.5)
    config = RadialConfig(LENS, angle, 32, t_end=0.004, snapshot_times=(0.002, 0.004))
    return run_loop(RadialDriver(config), radial_seed(lens_profile(angle), 32))
