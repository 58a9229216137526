"""From detected collision rates back to pressures.

The detectable event rate of one species above a hard cutoff is

    Gamma = (n A vbar / sqrt(2 pi)) * etabar,
    etabar = (1 - alpha) eta_s + alpha eta_d

(the projected-readout factors replace eta_s/eta_d for a single-axis
sensor).  Solving for the density and applying the ideal gas law gives
the measurement equation

    P = Gamma sqrt(2 pi) k_B T / (A vbar etabar)

which needs no calibration beyond geometry, temperature, and the
surface model: the estimate is primary whenever the cutoff sits low
enough that etabar is insensitive to the surface model, which holds for
Delta_p_min below a quarter of the thermal momentum (eta_s > 0.99 there).

Multi-species decomposition treats a measured spectrum as a nonnegative
linear combination of unit-density per-species templates and solves the
weighted least-squares problem with an active-set algorithm.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .constants import BOLTZMANN
from .errors import DomainError, NumericsError
from .kinetics import (
    PRIMARY_CUTOFF_RATIO,
    GasSpecies,
    MomentumSpectrum,
    SensorGeometry,
    differential_rate,
    diffuse_cutoff,
    projected_cutoff_factor,
    projected_differential_rate,
    specular_cutoff,
)

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_MIN_CUTOFF_FACTOR = 1e-12
_CONDITION_WARN = 1e8


@dataclass(frozen=True)
class PressureEstimate:
    """A primary pressure number with its provenance.

    ``relative_uncertainty`` is the shot-noise (counting) part only,
    present when the event count is known.  ``primary`` records whether
    the cutoff was low enough for the surface-model dependence to be
    negligible.
    """

    pressure: float
    relative_uncertainty: Optional[float]
    primary: bool
    inputs: dict = field(default_factory=dict)

    @property
    def sigma(self):
        if self.relative_uncertainty is None:
            return None
        return self.pressure * self.relative_uncertainty


@dataclass
class MixtureFit:
    """Partial-pressure decomposition of a measured spectrum."""

    species: list
    densities: np.ndarray
    density_sigmas: np.ndarray
    partial_pressures: np.ndarray
    pressure_sigmas: np.ndarray
    residual_chi2: float
    n_bins: int
    condition_number: float
    converged: bool
    iterations: int

    def total_pressure(self):
        return float(self.partial_pressures.sum())

    def report(self):
        """Plain-dict summary for JSON output."""
        return {
            "species": [
                {
                    "name": name,
                    "partial_pressure_pa": float(p),
                    "sigma_pa": float(s),
                    "density_m3": float(n),
                    "density_sigma_m3": float(ns),
                }
                for name, p, s, n, ns in zip(
                    self.species, self.partial_pressures, self.pressure_sigmas,
                    self.densities, self.density_sigmas)
            ],
            "total_pressure_pa": self.total_pressure(),
            "residual_chi2": float(self.residual_chi2),
            "n_bins": int(self.n_bins),
            "condition_number": float(self.condition_number),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
        }


def _mean_cutoff_factor(x_min, alpha, readout, rtol=1e-9):
    if readout == "projected_axis":
        eta_s = projected_cutoff_factor(x_min, "specular")
        eta_d = projected_cutoff_factor(x_min, "diffuse", rtol) if alpha > 0.0 else 0.0
    else:
        eta_s = float(specular_cutoff(x_min))
        eta_d = float(diffuse_cutoff(x_min)) if alpha > 0.0 else 0.0
    return (1.0 - alpha) * eta_s + alpha * eta_d


def pressure_from_rate(rate, dp_min, species: GasSpecies, sensor: SensorGeometry,
                       temperature=None, n_events=None) -> PressureEstimate:
    """Invert a detected above-cutoff rate into a pressure.

    ``species`` supplies the molecular mass and the surface-model
    weights; its density is ignored.  ``temperature`` defaults to the
    species temperature.  When ``n_events`` is given, the estimate
    carries the 1/sqrt(N) counting uncertainty.
    """
    if rate < 0.0:
        raise DomainError(f"measured rate must be non-negative, got {rate}")
    if dp_min < 0.0:
        raise DomainError(f"impulse cutoff must be non-negative, got {dp_min}")
    t = species.temperature if temperature is None else temperature
    if t <= 0.0:
        raise DomainError(f"temperature must be positive, got {t}")
    vbar = math.sqrt(BOLTZMANN * t / species.mass)
    alpha = sensor.accommodation if species.accommodation is None else species.accommodation
    x_min = dp_min / (species.mass * vbar)
    etabar = _mean_cutoff_factor(x_min, alpha, sensor.readout)
    if etabar < _MIN_CUTOFF_FACTOR:
        raise NumericsError(
            f"cutoff factor {etabar:.2e} at x_min = {x_min:.2f}: the threshold "
            "sits so far above the thermal momentum that the rate carries "
            "no pressure information", achieved=etabar)
    pressure = rate * _SQRT_2PI * BOLTZMANN * t / (sensor.area * vbar * etabar)
    rel = None
    if n_events is not None:
        rel = rate_uncertainty(n_events)
    return PressureEstimate(
        pressure=pressure,
        relative_uncertainty=rel,
        primary=bool(x_min < PRIMARY_CUTOFF_RATIO),
        inputs={
            "rate_hz": rate,
            "dp_min_si": dp_min,
            "x_min": x_min,
            "temperature_k": t,
            "area_m2": sensor.area,
            "accommodation": alpha,
            "readout": sensor.readout,
            "species": species.name,
            "cutoff_factor": etabar,
            "n_events": n_events,
        },
    )


def rate_uncertainty(n_events):
    """Relative shot-noise uncertainty of a counted rate, 1/sqrt(N)."""
    if n_events < 1:
        raise DomainError(f"need at least one event, got {n_events}")
    return 1.0 / math.sqrt(n_events)


def nnls(a, b, tol=1e-10, max_iter=None):
    """Nonnegative least squares: minimize ||a x - b|| with x >= 0.

    Active-set iteration (Lawson-Hanson).  ``tol`` bounds the projected
    gradient at the solution relative to ||a^T b||_inf.  Deterministic.
    Returns (x, converged, iterations).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 1 or a.shape[0] != b.shape[0]:
        raise DomainError("nnls needs a 2-D design matrix and a matching vector")
    m, n = a.shape
    if max_iter is None:
        max_iter = 10 * n + 10
    scale = float(np.abs(a.T @ b).max())
    if scale == 0.0:
        return np.zeros(n), True, 0
    threshold = tol * scale

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    iters = 0
    while iters < max_iter:
        w = a.T @ (b - a @ x)
        w_free = np.where(~passive, w, -np.inf)
        j = int(np.argmax(w_free))
        if passive.all() or w_free[j] <= threshold:
            return x, True, iters
        passive[j] = True
        while True:
            iters += 1
            s = np.zeros(n)
            s[passive], *_ = np.linalg.lstsq(a[:, passive], b, rcond=None)
            if np.all(s[passive] > 0.0):
                x = s
                break
            # step toward s only as far as feasibility allows, then drop
            # the variables that hit zero from the passive set
            blocking = passive & (s <= 0.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(blocking, x / (x - s), np.inf)
            alpha = float(np.min(ratios[blocking]))
            x = x + alpha * (s - x)
            x[x < 0.0] = 0.0
            passive &= x > 0.0
            if iters >= max_iter:
                return x, False, iters
    return x, False, iters


def _template_density(dp, species: GasSpecies, sensor: SensorGeometry):
    """Unit-density rate density for one species on the sensor's readout."""
    unit = species.with_density(1.0)
    if sensor.readout == "projected_axis":
        alpha = sensor.accommodation if unit.accommodation is None else unit.accommodation
        out = np.zeros_like(np.asarray(dp, dtype=float))
        if alpha < 1.0:
            out = out + (1.0 - alpha) * projected_differential_rate(dp, unit, sensor,
                                                                    "specular")
        if alpha > 0.0:
            out = out + alpha * projected_differential_rate(dp, unit, sensor, "diffuse")
        return out
    return differential_rate(dp, unit, sensor)


def _bin_averaged_templates(edges, species_list, sensor):
    """Design matrix of bin-averaged unit-density densities, one column
    per species (7-point Gauss-Legendre per bin)."""
    nodes, weights = np.polynomial.legendre.leggauss(7)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    samples = mid[:, None] + half[:, None] * nodes[None, :]
    cols = []
    for sp in species_list:
        dens = _template_density(samples.ravel(), sp, sensor).reshape(samples.shape)
        cols.append((dens @ weights) * 0.5)   # mean over the bin
    return np.stack(cols, axis=1)


def fit_mixture(spectrum: MomentumSpectrum, species_templates: Sequence[GasSpecies],
                sensor: SensorGeometry, dp_min=None) -> MixtureFit:
    """Decompose a measured rate-density spectrum into partial pressures.

    ``spectrum`` is typically an empirical histogram with Poisson errors
    and bin edges; an analytic (errorless) spectrum fits unweighted.
    Bins whose lower edge falls below ``dp_min`` are excluded: below the
    detection threshold the efficiency is not modeled, above it the hard
    cutoff makes the template exact.  Densities are constrained
    nonnegative; uncertainties come from the weighted normal matrix on
    the support of the solution.
    """
    species_templates = list(species_templates)
    if not species_templates:
        raise DomainError("at least one template species is required")
    if spectrum.bin_edges is not None:
        edges = spectrum.bin_edges
        keep = np.ones(len(edges) - 1, dtype=bool)
        if dp_min is not None:
            keep &= edges[:-1] >= dp_min
        if not np.any(keep):
            raise DomainError("no spectrum bins at or above dp_min")
        design_full = _bin_averaged_templates(edges, species_templates, sensor)
        design = design_full[keep]
        y = spectrum.density[keep]
        errors = None if spectrum.errors is None else spectrum.errors[keep]
    else:
        keep = np.ones(len(spectrum.dp), dtype=bool)
        if dp_min is not None:
            keep &= spectrum.dp >= dp_min
        if not np.any(keep):
            raise DomainError("no spectrum points at or above dp_min")
        dp = spectrum.dp[keep]
        design = np.stack(
            [_template_density(dp, sp, sensor) for sp in species_templates], axis=1)
        y = spectrum.density[keep]
        errors = None if spectrum.errors is None else spectrum.errors[keep]

    if errors is not None:
        # zero-count bins get the one-count error scale so they still
        # constrain the fit without infinite weight
        floor = errors[errors > 0.0]
        floor = float(floor.min()) if len(floor) else 1.0
        sigma = np.where(errors > 0.0, errors, floor)
    else:
        sigma = np.ones_like(y)

    a = design / sigma[:, None]
    rhs = y / sigma
    cond = float(np.linalg.cond(a))
    if cond > _CONDITION_WARN:
        warnings.warn(
            f"mixture templates are nearly collinear (condition number {cond:.2e}); "
            "partial pressures are poorly separated", stacklevel=2)

    densities, converged, iters = nnls(a, rhs, tol=1e-10)

    support = densities > 0.0
    sigmas = np.zeros_like(densities)
    if np.any(support):
        normal = a[:, support].T @ a[:, support]
        try:
            cov = np.linalg.inv(normal)
            sigmas[support] = np.sqrt(np.maximum(np.diag(cov), 0.0))
        except np.linalg.LinAlgError:
            sigmas[support] = np.inf
    resid = rhs - a @ densities
    chi2 = float(resid @ resid)

    temps = np.array([sp.temperature for sp in species_templates])
    return MixtureFit(
        species=[sp.name for sp in species_templates],
        densities=densities,
        density_sigmas=sigmas,
        partial_pressures=densities * BOLTZMANN * temps,
        pressure_sigmas=sigmas * BOLTZMANN * temps,
        residual_chi2=chi2,
        n_bins=int(np.count_nonzero(keep)),
        condition_number=cond,
        converged=converged,
        iterations=iters,
    )
