"""Shared fixtures: a few reference species and sensors used across tests."""
import pytest

from collision_gauge import GasSpecies, SensorGeometry
from collision_gauge.constants import amu_to_kg

H2_MASS = amu_to_kg(2.016)       # 3.34764675827e-27 kg
XE_MASS = amu_to_kg(131.293)


@pytest.fixture
def h2():
    """Hydrogen at 1e-10 Pa, 300 K."""
    return GasSpecies.from_pressure("H2", H2_MASS, 300.0, 1e-10)


@pytest.fixture
def xe():
    """Xenon at 1e-10 Pa, 300 K."""
    return GasSpecies.from_pressure("Xe", XE_MASS, 300.0, 1e-10)


@pytest.fixture
def sphere():
    """50 nm silica-sized sphere, 30% accommodation, isotropic readout."""
    return SensorGeometry.sphere(50e-9, accommodation=0.3)


@pytest.fixture
def sphere_axis():
    """Same sphere with a single-axis readout."""
    return SensorGeometry.sphere(50e-9, accommodation=0.3, readout="projected_axis")
