"""Collision-resolved pressure sensing with nanomechanical impulse readout.

The package splits into five layers that mirror the measurement chain:

``kinetics``
    Analytic momentum-transfer spectra and event rates of residual-gas
    collisions on a suspended sensor, per species and surface model.
``noise``
    Quantum-limited (and technical) readout noise spectra for a damped
    mechanical mode, matched-filter impulse SNR, and detection-threshold
    figures of merit.
``montecarlo``
    Event-by-event sampling of collision streams from the same physics
    as the analytic spectra, for validation and synthetic data.
``detection``
    Time-domain force traces, matched-filter construction, and
    threshold detection of individual impulses.
``inference``
    Inversion of detected rates and spectra into pressure estimates and
    multi-species partial-pressure fits.

Everything is strict SI unless a name says otherwise; helpers for
keV/c impulses and amu masses live in ``constants``.
"""
from .constants import (
    ATOMIC_MASS,
    BOLTZMANN,
    HBAR,
    KEV_C,
    amu_to_kg,
    kevc_to_si,
    si_to_kevc,
    sphere_mass,
)
from .errors import (
    CollisionGaugeError,
    ConfigError,
    DomainError,
    NumericsError,
    UnsupportedConfigurationError,
)
from .kinetics import (
    PRIMARY_CUTOFF_RATIO,
    GasSpecies,
    GridSpec,
    MomentumSpectrum,
    SensorGeometry,
    cutoff_factors,
    differential_rate,
    diffuse_cutoff,
    diffuse_shape_factor,
    mixture_differential_rate,
    mixture_total_rate,
    projected_cutoff_factor,
    projected_differential_rate,
    projected_total_rate,
    specular_cutoff,
    spectrum_peak_location,
    surface_averaged_cutoff,
    tabulate_spectrum,
    total_rate,
)
from .noise import (
    MechanicalMode,
    NoiseSpectrum,
    ReadoutConfig,
    impulse_snr,
    inverse_noise_integral,
    mechanical_response,
    min_detectable_impulse,
    naive_rate_estimate,
    q_requirement,
    quantum_force_psd,
    sql_impulse,
    technical_force_psd,
    thermal_kick_scale,
)
from .montecarlo import (
    KIND_DIFFUSE,
    KIND_LABELS,
    KIND_SPECULAR,
    CollisionEvent,
    EventStream,
    arrival_rate,
    empirical_spectrum,
    histogram_spectrum,
    sample_event_stream,
    sample_impulse,
    sample_impulses,
    spectrum_chi_square,
)
from .detection import (
    DetectedEvent,
    FilterKernel,
    ForceTrace,
    apply_filter,
    detect_impulses,
    detection_efficiency,
    match_events,
    match_pairs,
    matched_filter_kernel,
    robust_sigma,
    synthesize_trace,
)
from .inference import (
    MixtureFit,
    PressureEstimate,
    fit_mixture,
    nnls,
    pressure_from_rate,
    rate_uncertainty,
)

__version__ = "0.1.0"

__all__ = [
    "ATOMIC_MASS",
    "BOLTZMANN",
    "HBAR",
    "KEV_C",
    "amu_to_kg",
    "kevc_to_si",
    "si_to_kevc",
    "sphere_mass",
    "CollisionGaugeError",
    "ConfigError",
    "DomainError",
    "NumericsError",
    "UnsupportedConfigurationError",
    "PRIMARY_CUTOFF_RATIO",
    "GasSpecies",
    "GridSpec",
    "MomentumSpectrum",
    "SensorGeometry",
    "cutoff_factors",
    "differential_rate",
    "diffuse_cutoff",
    "diffuse_shape_factor",
    "mixture_differential_rate",
    "mixture_total_rate",
    "projected_cutoff_factor",
    "projected_differential_rate",
    "projected_total_rate",
    "specular_cutoff",
    "spectrum_peak_location",
    "surface_averaged_cutoff",
    "tabulate_spectrum",
    "total_rate",
    "MechanicalMode",
    "NoiseSpectrum",
    "ReadoutConfig",
    "impulse_snr",
    "inverse_noise_integral",
    "mechanical_response",
    "min_detectable_impulse",
    "naive_rate_estimate",
    "q_requirement",
    "quantum_force_psd",
    "sql_impulse",
    "technical_force_psd",
    "thermal_kick_scale",
    "KIND_DIFFUSE",
    "KIND_LABELS",
    "KIND_SPECULAR",
    "CollisionEvent",
    "EventStream",
    "arrival_rate",
    "empirical_spectrum",
    "histogram_spectrum",
    "sample_event_stream",
    "sample_impulse",
    "sample_impulses",
    "spectrum_chi_square",
    "DetectedEvent",
    "FilterKernel",
    "ForceTrace",
    "apply_filter",
    "detect_impulses",
    "detection_efficiency",
    "match_events",
    "match_pairs",
    "matched_filter_kernel",
    "robust_sigma",
    "synthesize_trace",
    "MixtureFit",
    "PressureEstimate",
    "fit_mixture",
    "nnls",
    "pressure_from_rate",
    "rate_uncertainty",
    "__version__",
]
