"""Momentum-transfer spectra of residual-gas collisions on a suspended sensor.

Free molecular flow is assumed throughout: the gas is a dilute
Maxwell-Boltzmann ensemble, molecules arrive independently, and the
sensor is heavy enough that a single collision does not change its
velocity on the scale of the gas thermal speed.  Each collision either
reflects specularly (probability ``1 - alpha``) or accommodates and
leaves with a freshly thermalized normal velocity (probability
``alpha``, the momentum accommodation coefficient).

For a specular reflection the impulse on the sensor is ``2 m_g v_perp``
where ``v_perp`` is the incoming normal speed; for a diffuse one it is
``m_g (v_in + v_out)`` with the outgoing normal speed drawn from the
same flux-weighted distribution.  Working per unit wall area and
integrating over the thermal distributions gives the differential event
rate with respect to impulse magnitude

    dGamma/dDp = (n A Dp / 4 m_g^2) f_B(Dp / 2 m_g)
                 * [(1 - alpha) + alpha * xi(Dp / (m_g vbar))]

where ``f_B`` is the one-dimensional Boltzmann density with thermal
scale ``vbar = sqrt(kB T / m_g)``, ``n`` the number density, ``A`` the
collecting area, and ``xi`` the diffuse shape factor implemented below.
Integrating above a detection cutoff ``Dp_min`` yields

    Gamma = (n A vbar / sqrt(2 pi)) [(1 - alpha) eta_s + alpha eta_d]

with cutoff factors ``eta_s``/``eta_d`` that tend to one as the cutoff
goes to zero.  All of these are per species and strictly linear in the
species density, so mixtures are plain sums.

A single-axis readout on a spherical sensor sees only the projection of
each impulse onto the readout axis.  The projected spectra (and their
cutoff factors) are obtained by averaging the per-patch formulas over
the sphere surface orientation; see ``projected_differential_rate``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import integrate, special

from .constants import BOLTZMANN, amu_to_kg
from .errors import ConfigError, DomainError, NumericsError, UnsupportedConfigurationError

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_SQRT_PI = math.sqrt(math.pi)

# Below this argument the closed form for xi() loses precision to
# cancellation, so a series branch takes over.
_XI_SERIES_CUTOFF = 1e-3

#: x = dp_min / (m_g vbar) below which a spectrum counts as primary:
#: the specular cutoff factor exceeds 0.99 for any x under 1/4, so the
#: detected rate is insensitive to the surface interaction model there.
PRIMARY_CUTOFF_RATIO = 0.25


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class GasSpecies:
    """One gas component: identity, mass, temperature, and number density.

    The optional ``accommodation`` overrides the sensor-wide momentum
    accommodation coefficient for this species only.
    """

    name: str
    mass: float                 # kg
    temperature: float          # K
    density: float              # m^-3
    accommodation: Optional[float] = None

    def __post_init__(self):
        if not self.name:
            raise DomainError("species name must be non-empty")
        if not (self.mass > 0.0 and math.isfinite(self.mass)):
            raise DomainError(f"species {self.name}: mass must be positive, got {self.mass}")
        if not (self.temperature > 0.0 and math.isfinite(self.temperature)):
            raise DomainError(
                f"species {self.name}: temperature must be positive, got {self.temperature}"
            )
        if not (self.density >= 0.0 and math.isfinite(self.density)):
            raise DomainError(
                f"species {self.name}: density must be non-negative, got {self.density}"
            )
        if self.accommodation is not None and not 0.0 <= self.accommodation <= 1.0:
            raise DomainError(
                f"species {self.name}: accommodation must lie in [0, 1], got {self.accommodation}"
            )

    @classmethod
    def from_pressure(cls, name, mass, temperature, pressure, accommodation=None):
        """Build a species from its partial pressure in Pa (ideal gas)."""
        if pressure < 0.0:
            raise DomainError(f"species {name}: pressure must be non-negative, got {pressure}")
        density = pressure / (BOLTZMANN * temperature)
        return cls(name, mass, temperature, density, accommodation)

    @classmethod
    def from_amu(cls, name, mass_u, temperature, density=0.0, accommodation=None):
        """Build a species with the mass given in atomic mass units."""
        return cls(name, amu_to_kg(mass_u), temperature, density, accommodation)

    @property
    def thermal_velocity(self):
        """Thermal velocity scale vbar = sqrt(kB T / m), m/s."""
        return math.sqrt(BOLTZMANN * self.temperature / self.mass)

    @property
    def thermal_momentum(self):
        """Thermal momentum sqrt(m kB T) = m vbar, kg m/s."""
        return math.sqrt(self.mass * BOLTZMANN * self.temperature)

    @property
    def pressure(self):
        """Partial pressure n kB T, Pa."""
        return self.density * BOLTZMANN * self.temperature

    def with_density(self, density):
        return replace(self, density=density)


_READOUTS = ("full_3d", "projected_axis")
_SHAPES = ("sphere", "plate")


@dataclass(frozen=True)
class SensorGeometry:
    """Collecting geometry and surface model of the sensor.

    ``accommodation`` is the fraction of collisions that thermalize on
    the surface (diffuse); the rest reflect specularly.  A readout of
    ``"projected_axis"`` models a single-axis motional readout on a
    sphere, which resolves only the impulse component along that axis.
    ``surface_temperature`` may be set when the wall is not equilibrated
    with the gas; only the Monte Carlo sampler supports that case.
    """

    area: float                         # m^2
    accommodation: float
    shape: str = "sphere"
    radius: Optional[float] = None
    readout: str = "full_3d"
    surface_temperature: Optional[float] = None

    def __post_init__(self):
        if not (self.area > 0.0 and math.isfinite(self.area)):
            raise DomainError(f"sensor area must be positive, got {self.area}")
        if not 0.0 <= self.accommodation <= 1.0:
            raise DomainError(f"accommodation must lie in [0, 1], got {self.accommodation}")
        if self.shape not in _SHAPES:
            raise DomainError(f"unknown sensor shape {self.shape!r}")
        if self.readout not in _READOUTS:
            raise DomainError(f"unknown readout mode {self.readout!r}")
        if self.readout == "projected_axis" and self.shape != "sphere":
            raise DomainError("projected_axis readout is modeled for spheres only")
        if self.shape == "sphere":
            if self.radius is None or self.radius <= 0.0:
                raise DomainError("spherical sensor needs a positive radius")
        if self.surface_temperature is not None and self.surface_temperature <= 0.0:
            raise DomainError(
                f"surface temperature must be positive, got {self.surface_temperature}"
            )

    @classmethod
    def sphere(cls, radius, accommodation, readout="full_3d", surface_temperature=None):
        area = 4.0 * math.pi * radius**2
        return cls(area, accommodation, "sphere", radius, readout, surface_temperature)

    @classmethod
    def plate(cls, area, accommodation, surface_temperature=None):
        return cls(area, accommodation, "plate", None, "full_3d", surface_temperature)


@dataclass(frozen=True)
class GridSpec:
    """Momentum grid request: bounds in kg m/s, point count, spacing."""

    lo: float
    hi: float
    count: int
    spacing: str = "linear"

    def __post_init__(self):
        if not (self.lo >= 0.0 and self.hi > self.lo):
            raise DomainError(f"grid bounds must satisfy 0 <= lo < hi, got [{self.lo}, {self.hi}]")
        if self.count < 2:
            raise DomainError(f"grid needs at least 2 points, got {self.count}")
        if self.spacing not in ("linear", "log"):
            raise DomainError(f"unknown grid spacing {self.spacing!r}")
        if self.spacing == "log" and self.lo <= 0.0:
            raise DomainError("log spacing needs a positive lower bound")

    def points(self):
        if self.spacing == "log":
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)


@dataclass
class MomentumSpectrum:
    """A tabulated event-rate density over impulse magnitude.

    ``dp`` are grid points (or bin centers for empirical spectra) in
    kg m/s, ``density`` is the rate density dGamma/dDp in events per
    second per (kg m/s), and ``errors``, when present, are one-sigma
    uncertainties of ``density``.  ``bin_edges`` is set for histogram
    estimates.  ``metadata`` records how the table was produced.
    """

    dp: np.ndarray
    density: np.ndarray
    errors: Optional[np.ndarray] = None
    bin_edges: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.dp = np.asarray(self.dp, dtype=float)
        self.density = np.asarray(self.density, dtype=float)
        if self.dp.ndim != 1 or self.dp.shape != self.density.shape:
            raise DomainError("spectrum grid and density must be 1-D and the same length")
        if np.any(np.diff(self.dp) <= 0.0):
            raise DomainError("spectrum grid must be strictly increasing")
        if np.any(self.density < 0.0):
            raise DomainError("rate density cannot be negative")
        if self.errors is not None:
            self.errors = np.asarray(self.errors, dtype=float)
            if self.errors.shape != self.density.shape:
                raise DomainError("errors must match the density array")
        if self.bin_edges is not None:
            self.bin_edges = np.asarray(self.bin_edges, dtype=float)
            if self.bin_edges.size != self.dp.size + 1:
                raise DomainError("bin_edges must have one more entry than the grid")


# ---------------------------------------------------------------------------
# scalar kernels


def _check_nonneg(x, what):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or not np.all(np.isfinite(x)):
        raise DomainError(f"{what} must be finite and non-negative")
    return x


def diffuse_shape_factor(x):
    """Shape factor xi(x) of the diffuse spectrum, x = Dp / (m_g vbar).

    xi(x) = sqrt(pi) x (1 - 2/x^2) erf(x/2) exp(-x^2/8) + 2 exp(-3x^2/8)

    The x = 0 point is a removable singularity with limit 0; the series
    xi = (2/3) x^2 - (7/60) x^4 + O(x^6) takes over below x = 1e-3,
    where the closed form would cancel catastrophically.  Accepts
    scalars or arrays; negative arguments raise.
    """
    x = _check_nonneg(x, "xi argument")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)

    small = x < _XI_SERIES_CUTOFF
    xs = x[small]
    out[small] = (2.0 / 3.0) * xs**2 - (7.0 / 60.0) * xs**4

    xb = x[~small]
    out[~small] = (
        _SQRT_PI * xb * (1.0 - 2.0 / xb**2) * special.erf(xb / 2.0) * np.exp(-xb**2 / 8.0)
        + 2.0 * np.exp(-3.0 * xb**2 / 8.0)
    )
    return out[0] if scalar else out


def specular_cutoff(x_min):
    """Fraction of specular events with impulse above x_min = Dp_min/(m vbar)."""
    x = _check_nonneg(x_min, "cutoff argument")
    return np.exp(-np.square(x) / 8.0)


def diffuse_cutoff(x_min):
    """Fraction of diffuse events above the cutoff.

    eta_d(x) = exp(-x^2/2) + (sqrt(pi)/2) x erf(x/2) exp(-x^2/4);
    flat to fourth order, eta_d = 1 - x^4/24 + O(x^6).
    """
    x = _check_nonneg(x_min, "cutoff argument")
    return np.exp(-np.square(x) / 2.0) + (
        _SQRT_PI / 2.0 * x * special.erf(x / 2.0) * np.exp(-np.square(x) / 4.0)
    )


def cutoff_factors(x_min):
    """Return (eta_specular, eta_diffuse) at the reduced cutoff x_min."""
    return specular_cutoff(x_min), diffuse_cutoff(x_min)


def _alpha_for(species: GasSpecies, sensor: SensorGeometry) -> float:
    return sensor.accommodation if species.accommodation is None else species.accommodation


def _require_equilibrium(species: GasSpecies, sensor: SensorGeometry):
    t_s = sensor.surface_temperature
    if t_s is not None and t_s != species.temperature:
        raise UnsupportedConfigurationError(
            "analytic spectra assume the wall is equilibrated with the gas "
            f"(gas {species.temperature} K, surface {t_s} K); "
            "use the montecarlo module for a hot or cold wall"
        )


# ---------------------------------------------------------------------------
# full (isotropic readout) spectra


def differential_rate(dp, species: GasSpecies, sensor: SensorGeometry):
    """Rate density dGamma/dDp of collisions with impulse magnitude dp.

    Vectorized over ``dp`` (kg m/s).  Returns events / s / (kg m/s).
    """
    _require_equilibrium(species, sensor)
    dp = _check_nonneg(dp, "impulse")
    m = species.mass
    vbar = species.thermal_velocity
    alpha = _alpha_for(species, sensor)
    x = dp / (m * vbar)
    boltz = np.exp(-np.square(dp) / (8.0 * m**2 * vbar**2)) / (_SQRT_2PI * vbar)
    shape = (1.0 - alpha) + alpha * diffuse_shape_factor(x)
    return species.density * sensor.area * dp / (4.0 * m**2) * boltz * shape


def mixture_differential_rate(dp, species_list: Sequence[GasSpecies], sensor: SensorGeometry):
    """Sum of per-species rate densities; linear in each density."""
    dp = np.asarray(dp, dtype=float)
    total = np.zeros_like(dp, dtype=float)
    for sp in species_list:
        total = total + differential_rate(dp, sp, sensor)
    return total


def total_rate(dp_min, species: GasSpecies, sensor: SensorGeometry):
    """Collision rate with impulse magnitude above ``dp_min``, events/s."""
    _require_equilibrium(species, sensor)
    dp_min = float(_check_nonneg(dp_min, "impulse cutoff"))
    vbar = species.thermal_velocity
    alpha = _alpha_for(species, sensor)
    x = dp_min / (species.mass * vbar)
    eta = (1.0 - alpha) * specular_cutoff(x) + alpha * diffuse_cutoff(x)
    return species.density * sensor.area * vbar / _SQRT_2PI * eta


def mixture_total_rate(dp_min, species_list: Sequence[GasSpecies], sensor: SensorGeometry):
    return sum(total_rate(dp_min, sp, sensor) for sp in species_list)


def spectrum_peak_location(species: GasSpecies):
    """Impulse at which the specular rate density peaks: 2 m vbar.

    The diffuse spectrum peaks close to, but not exactly at, the same
    place; for a pure specular surface this is exact.
    """
    return 2.0 * species.mass * species.thermal_velocity


# ---------------------------------------------------------------------------
# single-axis (projected) spectra on a sphere

_SCATTER_MODELS = ("specular", "diffuse")


def _check_scatter(scatter):
    if scatter not in _SCATTER_MODELS:
        raise DomainError(f"scatter model must be one of {_SCATTER_MODELS}, got {scatter!r}")


def _quad_unit_interval(f, rtol, what, points=None):
    """Adaptive quadrature on (0, 1] with a subdivision cap and an
    accuracy check; raises NumericsError if the target is missed."""
    with np.errstate(over="ignore", under="ignore"):
        val, err = integrate.quad(f, 0.0, 1.0, epsabs=0.0, epsrel=rtol, limit=200,
                                  points=points)
    if val != 0.0 and not (abs(err) <= 10.0 * rtol * abs(val)):
        raise NumericsError(
            f"{what}: quadrature reached relative error {abs(err / val):.2e}, "
            f"target {rtol:.2e}", achieved=abs(err / max(abs(val), 1e-300)))
    return val


def _diffuse_patch_kernel(w):
    """Per-patch diffuse spectrum shape at reduced impulse w = Dp/(m vbar).

    This is the bracket of the per-unit-area diffuse rate density; it is
    bounded on [0, inf) and decays as a Gaussian.
    """
    w = np.asarray(w, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        term = (
            _SQRT_PI / 2.0 * (w - 2.0 / w) * special.erf(w / 2.0) * np.exp(-np.square(w) / 4.0)
        )
    term = np.where(w > 0.0, term, -1.0)   # limit of the product as w -> 0
    return np.exp(-np.square(w) / 2.0) + term


def projected_differential_rate(dp_axis, species: GasSpecies, sensor: SensorGeometry,
                                scatter: str, rtol: float = 1e-9):
    """Rate density of the impulse component along a single readout axis.

    The sensor must be a sphere.  Impulses are folded by magnitude: the
    returned density at ``dp_axis`` counts events whose axis projection
    has absolute value near ``dp_axis``, and integrates to the full
    collision rate.

    For specular scattering the surface average has the closed form

        dGamma/dDp_z = (n pi R^2 / m_g) erfc(Dp_z / (sqrt(8) m_g vbar))

    For diffuse scattering the surface average is done numerically in
    u = cos(theta) on (0, 1] to relative tolerance ``rtol``; the
    integrand's apparent 1/u^2 growth is cut off by a Gaussian in
    1/u, so it is bounded and vanishes at u -> 0.
    """
    _require_equilibrium(species, sensor)
    _check_scatter(scatter)
    if sensor.shape != "sphere":
        raise DomainError("projected spectra are modeled for spheres only")
    dp_axis = _check_nonneg(dp_axis, "axis impulse")
    scalar = dp_axis.ndim == 0
    dp_arr = np.atleast_1d(dp_axis)

    m = species.mass
    vbar = species.thermal_velocity
    radius = sensor.radius
    q = dp_arr / (m * vbar)

    if scatter == "specular":
        out = (species.density * math.pi * radius**2 / m) * special.erfc(q / math.sqrt(8.0))
    else:
        # prefactor: (n Dp / 2 m^2) * (4 pi R^2) / sqrt(2 pi vbar^2)
        pref = (
            species.density * dp_arr / (2.0 * m**2)
            * 4.0 * math.pi * radius**2 / (_SQRT_2PI * vbar)
        )
        vals = np.empty_like(q)
        for i, qi in enumerate(q):
            if qi == 0.0:
                # limit q -> 0: q * Int_0^1 u^-2 K(q/u) du -> Int_0^inf K(w) dw,
                # and the prefactor already carries the factor of q through Dp
                integral, _ = integrate.quad(_diffuse_patch_kernel, 0.0, np.inf, limit=200)
                vals[i] = integral
                pref[i] = (
                    species.density * m * vbar / (2.0 * m**2)
                    * 4.0 * math.pi * radius**2 / (_SQRT_2PI * vbar)
                )
                continue
            anchors = sorted({min(1.0, qi), min(1.0, 5.0 * qi)} - {1.0}) or None
            vals[i] = _quad_unit_interval(
                lambda u, qq=qi: _diffuse_patch_kernel(qq / u) / u**2,
                rtol, "projected diffuse spectrum", points=anchors)
        out = pref * vals

    return out[0] if scalar else out


def projected_cutoff_factor(x_min, scatter: str, rtol: float = 1e-9):
    """Cutoff factor eta' for a single-axis readout at x_min = Dp_min/(m vbar).

    The specular factor is taken equal to the isotropic-readout value
    exp(-x^2/8); the diffuse factor averages the per-patch cutoff over
    surface orientation, eta'_d(x) = Int_0^1 eta_d(x/u) du, evaluated
    by adaptive quadrature.  ``surface_averaged_cutoff`` gives the
    orientation average for both models.
    """
    _check_scatter(scatter)
    x = float(_check_nonneg(x_min, "cutoff argument"))
    if scatter == "specular":
        return float(specular_cutoff(x))
    if x == 0.0:
        return 1.0
    return _quad_unit_interval(lambda u: float(diffuse_cutoff(x / u)), rtol,
                               "projected diffuse cutoff")


def surface_averaged_cutoff(x_min, scatter: str, rtol: float = 1e-9):
    """Orientation-averaged detectable fraction along one axis.

    This is Int_0^1 eta(x/u) du for either scatter model: the exact
    fraction of collisions whose axis projection exceeds the cutoff.
    The specular case has a closed form,

        exp(-x^2/8) - sqrt(pi) (x / sqrt(8)) erfc(x / sqrt(8)),

    which is strictly below the isotropic-readout factor exp(-x^2/8)
    for any positive cutoff, since projection can only lose signal.
    The diffuse case coincides with ``projected_cutoff_factor``.
    """
    _check_scatter(scatter)
    x = float(_check_nonneg(x_min, "cutoff argument"))
    if scatter == "diffuse":
        return projected_cutoff_factor(x, "diffuse", rtol)
    a = x / math.sqrt(8.0)
    return float(np.exp(-x**2 / 8.0) - _SQRT_PI * a * special.erfc(a))


def projected_total_rate(dp_min, species: GasSpecies, sensor: SensorGeometry,
                         scatter: str, rtol: float = 1e-9):
    """Above-cutoff event rate for a single-axis readout, events/s.

    Returns (n A vbar / sqrt(2 pi)) * eta' with the cutoff factors of
    ``projected_cutoff_factor``.
    """
    _require_equilibrium(species, sensor)
    dp_min = float(_check_nonneg(dp_min, "impulse cutoff"))
    if sensor.shape != "sphere":
        raise DomainError("projected spectra are modeled for spheres only")
    vbar = species.thermal_velocity
    x = dp_min / (species.mass * vbar)
    eta = projected_cutoff_factor(x, scatter, rtol)
    return species.density * sensor.area * vbar / _SQRT_2PI * eta


# ---------------------------------------------------------------------------
# tabulation


def tabulate_spectrum(species_list: Iterable[GasSpecies], sensor: SensorGeometry,
                      grid: GridSpec, rtol: float = 1e-9) -> MomentumSpectrum:
    """Evaluate the mixture rate density on a grid.

    For a ``full_3d`` readout this is the isotropic spectrum with the
    per-species accommodation mix.  For ``projected_axis`` it is the
    single-axis spectrum, combining the specular and diffuse surface
    averages with the same weights.
    """
    species_list = list(species_list)
    if not species_list:
        raise ConfigError("at least one species is required")
    dp = grid.points()
    if sensor.readout == "projected_axis":
        total = np.zeros_like(dp)
        for sp in species_list:
            alpha = _alpha_for(sp, sensor)
            if alpha < 1.0:
                total += (1.0 - alpha) * projected_differential_rate(dp, sp, sensor,
                                                                     "specular", rtol)
            if alpha > 0.0:
                total += alpha * projected_differential_rate(dp, sp, sensor,
                                                             "diffuse", rtol)
        density = total
    else:
        density = mixture_differential_rate(dp, species_list, sensor)
    meta = {
        "readout": sensor.readout,
        "species": [sp.name for sp in species_list],
        "densities_m3": [sp.density for sp in species_list],
        "temperatures_k": [sp.temperature for sp in species_list],
        "accommodation": sensor.accommodation,
        "area_m2": sensor.area,
    }
    return MomentumSpectrum(dp=dp, density=density, metadata=meta)
