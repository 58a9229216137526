"""Readout noise of a mechanical impulse sensor and matched-filter SNR.

The sensor is a damped harmonic mode with susceptibility

    chi_m(nu) = 1 / (m_s (nu^2 - omega_s^2 - i gamma_s nu))

read out interferometrically.  The displacement record, referred back to
force, carries two quantum contributions: imprecision (shot) noise that
scales as 1/|chi_m(nu)|^2, and backaction that is white in force.  With
the measurement strength tuned so the two are equal at a balance
frequency omega_0, the total quantum force PSD is

    S_Q(nu) = hbar |chi_m(omega_0)| [ 1/|chi_m(nu)|^2 + 1/|chi_m(omega_0)|^2 ]

which touches its floor 2 hbar / |chi_m(omega_0)| at nu = omega_0.
Setting omega_s = gamma_s = 0 gives the free-particle limit
S_Q = hbar m_s omega_0^2 (1 + nu^4/omega_0^4) exactly.  Thermal force
noise from the bath enters as a white floor S_tech = 4 m_s k_B T_B gamma,
normalized so an integration time tau accumulates a momentum random walk
Delta_p_tech = sqrt(S_tech tau).

Conventions: PSDs are one-sided in angular frequency nu (rad/s) with
units N^2 s, so the matched-filter SNR of an impulse Delta_p is

    SNR = sqrt( Integral_0^inf dnu  Delta_p^2 / S_FF(nu) )

with no extra 2 pi anywhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import integrate

from .constants import BOLTZMANN, HBAR, sphere_mass
from .errors import DomainError, NumericsError

_TAIL_GROWTH_MIN = 1.05   # minimal high-frequency PSD growth exponent for a finite SNR


@dataclass(frozen=True)
class MechanicalMode:
    """One mechanical degree of freedom of the sensor.

    ``frequency`` and ``damping`` are angular (rad/s).  Zero frequency
    and damping describe an ideal free particle, useful as the limit a
    levitated sensor approaches far above resonance; both must then be
    zero together with care taken that the readout balance frequency
    stays away from the (undamped) resonance.
    """

    mass: float
    frequency: float
    damping: float = 0.0
    bath_temperature: float = 300.0

    def __post_init__(self):
        if not (self.mass > 0.0 and math.isfinite(self.mass)):
            raise DomainError(f"mode mass must be positive, got {self.mass}")
        if self.frequency < 0.0 or not math.isfinite(self.frequency):
            raise DomainError(f"mode frequency must be non-negative, got {self.frequency}")
        if self.damping < 0.0 or not math.isfinite(self.damping):
            raise DomainError(f"mode damping must be non-negative, got {self.damping}")
        if self.bath_temperature < 0.0:
            raise DomainError(
                f"bath temperature must be non-negative, got {self.bath_temperature}")

    @classmethod
    def for_sphere(cls, radius, frequency, damping=0.0, density=2200.0,
                   bath_temperature=300.0):
        """Mode of a trapped sphere; mass from radius and bulk density
        (default silica)."""
        return cls(sphere_mass(radius, density), frequency, damping, bath_temperature)

    @property
    def quality_factor(self):
        """Q = omega_s / gamma_s; infinite for an undamped mode."""
        if self.damping == 0.0:
            return math.inf
        return self.frequency / self.damping


@dataclass(frozen=True)
class ReadoutConfig:
    """Interferometric readout tuning: the angular frequency where
    imprecision equals backaction."""

    balance_frequency: float

    def __post_init__(self):
        if not (self.balance_frequency > 0.0 and math.isfinite(self.balance_frequency)):
            raise DomainError(
                f"balance frequency must be positive, got {self.balance_frequency}")


def mechanical_response(nu, mode: MechanicalMode):
    """Complex mechanical susceptibility chi_m(nu), m/N.  Vectorized."""
    nu = np.asarray(nu, dtype=float)
    denom = mode.mass * (np.square(nu) - mode.frequency**2 - 1j * mode.damping * nu)
    with np.errstate(divide="ignore", invalid="ignore"):
        chi = np.where(denom != 0, 1.0 / np.where(denom != 0, denom, 1.0), np.inf + 0j)
    return chi if chi.ndim else complex(chi)


def _inverse_chi_sq(nu, mode: MechanicalMode):
    """1 / |chi_m(nu)|^2 = m^2 [ (nu^2 - omega_s^2)^2 + gamma^2 nu^2 ]."""
    nu = np.asarray(nu, dtype=float)
    return mode.mass**2 * (
        np.square(np.square(nu) - mode.frequency**2) + mode.damping**2 * np.square(nu)
    )


def _balance_stiffness(mode: MechanicalMode, readout: ReadoutConfig):
    """1 / |chi_m(omega_0)|, guarding the undamped-resonance singularity."""
    d0 = float(_inverse_chi_sq(readout.balance_frequency, mode))
    if d0 == 0.0:
        raise DomainError(
            "readout balance frequency sits on an undamped resonance; "
            "the balanced quantum noise floor is undefined there")
    return math.sqrt(d0)


def quantum_force_psd(nu, mode: MechanicalMode, readout: ReadoutConfig):
    """Balanced quantum force PSD S_Q(nu), one-sided, N^2 s.  Vectorized."""
    k0 = _balance_stiffness(mode, readout)
    nu = np.asarray(nu, dtype=float)
    out = HBAR * (_inverse_chi_sq(nu, mode) / k0 + k0)
    return out if out.ndim else float(out)


def technical_force_psd(mode: MechanicalMode, damping=None, bath_temperature=None):
    """White thermal force PSD 4 m_s k_B T_B gamma, N^2 s.

    ``damping`` and ``bath_temperature`` default to the mode's own; an
    override lets a feedback-broadened or externally clamped linewidth
    carry the thermal force while the coherent response keeps the bare
    gamma.
    """
    gamma = mode.damping if damping is None else damping
    t_bath = mode.bath_temperature if bath_temperature is None else bath_temperature
    if gamma < 0.0:
        raise DomainError(f"damping must be non-negative, got {gamma}")
    if t_bath < 0.0:
        raise DomainError(f"bath temperature must be non-negative, got {t_bath}")
    return 4.0 * mode.mass * BOLTZMANN * t_bath * gamma


@dataclass(frozen=True)
class NoiseSpectrum:
    """Total force-referred noise model: quantum terms plus a white floor.

    ``readout`` may be None for a purely technical (white) spectrum,
    which is occasionally useful as a filter-pipeline baseline; note a
    white spectrum has no finite matched-filter SNR.
    """

    mode: Optional[MechanicalMode]
    readout: Optional[ReadoutConfig]
    technical: float = 0.0

    def __post_init__(self):
        if self.technical < 0.0 or not math.isfinite(self.technical):
            raise DomainError(f"technical noise floor must be non-negative, got {self.technical}")
        if self.readout is not None and self.mode is None:
            raise DomainError("a quantum readout needs a mechanical mode")
        if self.readout is None and self.technical == 0.0:
            raise DomainError("noise spectrum is identically zero")
        if self.readout is not None:
            _balance_stiffness(self.mode, self.readout)   # validate now, not on first call

    @classmethod
    def free_particle(cls, mass, balance_frequency, bath_temperature=300.0, technical=0.0):
        """Quantum-limited readout of a free mass:
        S_Q = hbar m omega_0^2 (1 + nu^4 / omega_0^4)."""
        mode = MechanicalMode(mass, 0.0, 0.0, bath_temperature)
        return cls(mode, ReadoutConfig(balance_frequency), technical)

    @classmethod
    def white(cls, level):
        """Flat spectrum at ``level`` N^2 s, no quantum structure."""
        return cls(None, None, level)

    def with_technical(self, damping=None, bath_temperature=None):
        """Add the thermal floor 4 m k_B T_B gamma for this mode."""
        if self.mode is None:
            raise DomainError("no mechanical mode to derive a thermal floor from")
        floor = technical_force_psd(self.mode, damping, bath_temperature)
        return replace(self, technical=self.technical + floor)

    # -- component evaluators (vectorized, one-sided, N^2 s) --

    def shot(self, nu):
        if self.readout is None:
            return np.zeros_like(np.asarray(nu, dtype=float))
        k0 = _balance_stiffness(self.mode, self.readout)
        out = HBAR * _inverse_chi_sq(nu, self.mode) / k0
        return out if out.ndim else float(out)

    def backaction(self, nu):
        nu = np.asarray(nu, dtype=float)
        if self.readout is None:
            val = 0.0
        else:
            val = HBAR * _balance_stiffness(self.mode, self.readout)
        out = np.full_like(nu, val)
        return out if out.ndim else float(out)

    def technical_floor(self, nu):
        nu = np.asarray(nu, dtype=float)
        out = np.full_like(nu, self.technical)
        return out if out.ndim else float(out)

    def total(self, nu):
        nu = np.asarray(nu, dtype=float)
        out = np.full_like(nu, self.technical)
        if self.readout is not None:
            k0 = _balance_stiffness(self.mode, self.readout)
            out = out + HBAR * (_inverse_chi_sq(nu, self.mode) / k0 + k0)
        return out if out.ndim else float(out)

    __call__ = total

    def frequency_scales(self):
        """Characteristic angular frequencies of the spectrum's structure."""
        scales = []
        if self.mode is not None:
            if self.mode.frequency > 0.0:
                scales.append(self.mode.frequency)
            if self.mode.damping > 0.0:
                scales.append(self.mode.damping)
        if self.readout is not None:
            scales.append(self.readout.balance_frequency)
        return scales


def _quad_anchors(noise: NoiseSpectrum, hi):
    """Interior break points for the SNR quadrature: the resonance and
    its linewidth neighborhood, and the balance frequency."""
    pts = set()
    mode = noise.mode
    if mode is not None and mode.frequency > 0.0:
        gamma = mode.damping
        for p in (mode.frequency, mode.frequency - 5 * gamma, mode.frequency + 5 * gamma,
                  mode.frequency - gamma, mode.frequency + gamma):
            pts.add(p)
    if noise.readout is not None:
        pts.add(noise.readout.balance_frequency)
    return sorted(p for p in pts if 0.0 < p < hi)


def inverse_noise_integral(noise: NoiseSpectrum, upper=None, rtol=1e-6):
    """Evaluate Integral dnu / S_FF(nu) from 0 to ``upper`` (or infinity).

    This is the square of the matched-filter SNR per unit impulse.  The
    infinite-range form converges only if the PSD grows faster than nu
    at high frequency (the quantum shot term grows as nu^4); a spectrum
    without that growth, such as a purely white one, raises
    NumericsError.  The band-limited form (``upper`` set) always exists
    and is what a sampled filter at a finite Nyquist frequency achieves.
    """
    scales = noise.frequency_scales()
    nu_hi = 4.0 * max(scales) if scales else 1.0

    def integrand(nu):
        return 1.0 / noise.total(nu)

    if upper is not None:
        if upper <= 0.0:
            raise DomainError(f"integration band edge must be positive, got {upper}")
        pts = _quad_anchors(noise, upper) or None
        val, err = integrate.quad(integrand, 0.0, upper, points=pts,
                                  limit=400, epsabs=0.0, epsrel=rtol / 2)
        total, toterr = val, err
    else:
        # check the tail actually decays: fit the growth exponent
        s1, s2 = noise.total(nu_hi), noise.total(100.0 * nu_hi)
        growth = math.log(s2 / s1) / math.log(100.0)
        if growth <= _TAIL_GROWTH_MIN:
            raise NumericsError(
                "matched-filter integral diverges: PSD grows only as "
                f"nu^{growth:.2f} at high frequency (needs > nu^1); "
                "a white floor alone has no finite impulse SNR")
        pts = _quad_anchors(noise, nu_hi) or None
        val1, err1 = integrate.quad(integrand, 0.0, nu_hi, points=pts,
                                    limit=400, epsabs=0.0, epsrel=rtol / 4)
        # map [nu_hi, inf) onto (0, 1] with nu = nu_hi / t
        val2, err2 = integrate.quad(
            lambda t: (nu_hi / t**2) / noise.total(nu_hi / t), 0.0, 1.0,
            limit=400, epsabs=0.0, epsrel=rtol / 4)
        total, toterr = val1 + val2, err1 + err2

    if total <= 0.0 or not math.isfinite(total):
        raise NumericsError(f"matched-filter integral failed: value {total}")
    if toterr > rtol * total:
        raise NumericsError(
            f"matched-filter integral reached relative error {toterr / total:.2e}, "
            f"target {rtol:.2e}", achieved=toterr / total)
    return total


def impulse_snr(dp, noise: NoiseSpectrum, rtol=1e-6):
    """Matched-filter amplitude SNR of a momentum kick ``dp`` (kg m/s).

    SNR = dp * sqrt( Integral_0^inf dnu / S_FF(nu) ); linear in dp.
    """
    if dp < 0.0:
        raise DomainError(f"impulse must be non-negative, got {dp}")
    if dp == 0.0:
        return 0.0
    return dp * math.sqrt(inverse_noise_integral(noise, rtol=rtol))


def min_detectable_impulse(noise: NoiseSpectrum, snr_target=1.0, rtol=1e-6):
    """Impulse at which the matched-filter SNR reaches ``snr_target``."""
    if snr_target < 0.0:
        raise DomainError(f"SNR target must be non-negative, got {snr_target}")
    if snr_target == 0.0:
        return 0.0
    return snr_target / math.sqrt(inverse_noise_integral(noise, rtol=rtol))


def sql_impulse(mass, tau):
    """Standard quantum limit for impulse detection, sqrt(hbar m / tau).

    The momentum spread of a mass prepared and interrogated for a time
    tau cannot beat this scale without squeezing or backaction evasion.
    """
    if not (mass > 0.0 and tau > 0.0):
        raise DomainError(f"mass and interrogation time must be positive, got {mass}, {tau}")
    return math.sqrt(HBAR * mass / tau)


def thermal_kick_scale(species):
    """Typical single-collision momentum transfer sqrt(m_g k_B T), kg m/s."""
    return species.thermal_momentum


def naive_rate_estimate(pressure, area, species):
    """Back-of-envelope collision rate Gamma = P A / sqrt(m_g k_B T), 1/s.

    Pressure is momentum flux per area; dividing by the typical
    per-collision transfer gives an order-of-magnitude event rate.  The
    kinetics module has the exact version; this one exists for quick
    feasibility numbers.
    """
    if pressure < 0.0 or area < 0.0:
        raise DomainError("pressure and area must be non-negative")
    return pressure * area / species.thermal_momentum


def q_requirement(species, mode: MechanicalMode, tau):
    """Minimum mechanical quality factor for gas kicks to beat the bath.

    Over an integration time tau the bath force builds a momentum random
    walk Delta_p_tech = sqrt(4 m_s k_B T_B gamma tau).  Requiring that a
    single thermal gas kick Delta_p_T = sqrt(m_g k_B T_gas) stay above
    it bounds the damping, gamma <= m_g T_gas / (4 m_s T_B tau), i.e.

        Q_min = omega_s / gamma_max = 4 m_s T_B omega_s tau / (m_g T_gas)

    Linear in tau and in T_B; cooling the bath from 300 K to 4 K
    relaxes the requirement by exactly 75x.
    """
    if tau <= 0.0:
        raise DomainError(f"integration time must be positive, got {tau}")
    if mode.frequency <= 0.0:
        raise DomainError("Q requirement needs a resonant mode (frequency > 0)")
    if mode.bath_temperature <= 0.0:
        raise DomainError("Q requirement needs a positive bath temperature")
    gamma_max = (species.mass * species.temperature) / (
        4.0 * mode.mass * mode.bath_temperature * tau)
    return mode.frequency / gamma_max
