"""Physical constants (CODATA 2018) and unit conversion helpers.

Unit policy: the library is strict SI internally.  Momenta are kg m/s,
angular frequencies rad/s, temperatures K, pressures Pa, and force
power spectral densities are one-sided in angular frequency (N^2 s).
The keV/c momentum unit appears only at presentation boundaries such
as CLI tables and figure axes.
"""
import math

BOLTZMANN = 1.380649e-23          # J/K (exact)
PLANCK = 6.62607015e-34           # J s (exact)
HBAR = PLANCK / (2.0 * math.pi)   # J s
ATOMIC_MASS = 1.66053906660e-27   # kg
ELEMENTARY_CHARGE = 1.602176634e-19   # C (exact)
SPEED_OF_LIGHT = 299792458.0      # m/s (exact)

# One keV/c of momentum, in kg m/s.  Derived from exact constants;
# equals 5.344286e-25 to the digits usually quoted.
KEV_C = 1e3 * ELEMENTARY_CHARGE / SPEED_OF_LIGHT


def kevc_to_si(p_kevc):
    """Convert momentum in keV/c to kg m/s."""
    return p_kevc * KEV_C


def si_to_kevc(p_si):
    """Convert momentum in kg m/s to keV/c."""
    return p_si / KEV_C


def amu_to_kg(mass_u):
    """Convert a molecular mass in unified atomic mass units to kg."""
    return mass_u * ATOMIC_MASS


def sphere_mass(radius, density):
    """Mass of a homogeneous sphere, kg."""
    return 4.0 / 3.0 * math.pi * radius**3 * density
