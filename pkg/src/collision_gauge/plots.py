"""Report figures rendered alongside the delimited outputs.

Every figure is drawn with the Agg backend at a fixed size and DPI, so
reruns of the same configuration reproduce the image byte for byte.
Figures are a reading aid for the CSV tables next to them; the tables
remain the authoritative output.
"""
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .constants import KEV_C  # noqa: E402

_DPI = 150
_TWO_PI = 2.0 * np.pi


def _save(fig, path):
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_spectrum_figure(path, curves, markers=None):
    """Rate-density curves over impulse; ``curves`` is [(label, spectrum)].

    Histogram spectra (those carrying errors) are drawn as points with
    error bars, analytic tables as lines.  ``markers`` maps labels to
    impulse values drawn as vertical threshold lines.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.5), layout="constrained")
    for label, spectrum in curves:
        x = spectrum.dp / KEV_C
        y = spectrum.density * KEV_C
        if spectrum.errors is not None:
            ax.errorbar(x, y, yerr=spectrum.errors * KEV_C, fmt="o",
                        markersize=2.5, linewidth=0.8, label=label)
        else:
            ax.plot(x, y, label=label)
    for label, dp in (markers or {}).items():
        ax.axvline(dp / KEV_C, color="black", linestyle="--", linewidth=1.0)
        ax.text(dp / KEV_C, ax.get_ylim()[1] * 0.95, f" {label}",
                rotation=90, va="top", fontsize=8)
    ax.set_xlabel("impulse (keV/c)")
    ax.set_ylabel("rate density (events / s / (keV/c))")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def save_noise_figure(path, nu, curves):
    """Force-noise PSDs over frequency; ``curves`` is [(label, psd array)]."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5), layout="constrained")
    for label, psd in curves:
        positive = np.asarray(psd) > 0.0
        ax.loglog(np.asarray(nu)[positive] / _TWO_PI,
                  np.asarray(psd)[positive], label=label)
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("force PSD (N$^2$ s)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    return _save(fig, path)


def save_integrand_figure(path, nu, curves):
    """SNR-squared integrand per tuning; ``curves`` is [(label, values)]."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5), layout="constrained")
    for label, values in curves:
        ax.loglog(np.asarray(nu) / _TWO_PI, values, label=label)
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel(r"$\Delta p^2 / S_{FF}(\nu)$ (s)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    return _save(fig, path)


def save_trace_figure(path, times, samples, truth_times=(), detected_times=(),
                      max_points=20000):
    """Leading stretch of the force record with event markers."""
    n = min(len(samples), max_points)
    times = np.asarray(times)[:n]
    fig, ax = plt.subplots(figsize=(8.0, 4.0), layout="constrained")
    ax.plot(times, np.asarray(samples)[:n], linewidth=0.4, color="gray")
    t_end = times[-1] if n else 0.0
    shown_truth = [t for t in truth_times if t <= t_end]
    shown_det = [t for t in detected_times if t <= t_end]
    for i, t in enumerate(shown_truth):
        ax.axvline(t, color="tab:blue", alpha=0.6, linewidth=0.8,
                   label="truth" if i == 0 else None)
    for i, t in enumerate(shown_det):
        ax.axvline(t, color="tab:red", alpha=0.6, linewidth=0.8,
                   linestyle=":", label="detected" if i == 0 else None)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("force (N)")
    if shown_truth or shown_det:
        ax.legend(fontsize=8)
    return _save(fig, path)


def save_amplitude_figure(path, truth_impulses, detected_impulses,
                          threshold=None, bins=60):
    """Truth and recovered impulse distributions on a common binning."""
    truth = np.asarray(truth_impulses, dtype=float)
    det = np.abs(np.asarray(detected_impulses, dtype=float))
    hi = max(truth.max() if len(truth) else 0.0,
             det.max() if len(det) else 0.0, 1e-30) * (1 + 1e-9)
    edges = np.linspace(0.0, hi / KEV_C, bins + 1)
    fig, ax = plt.subplots(figsize=(7.0, 4.5), layout="constrained")
    ax.hist(truth / KEV_C, bins=edges, histtype="step", label="truth")
    ax.hist(det / KEV_C, bins=edges, histtype="step", label="detected")
    if threshold is not None:
        ax.axvline(threshold / KEV_C, color="black", linestyle="--",
                   linewidth=1.0, label="threshold")
    ax.set_xlabel("impulse (keV/c)")
    ax.set_ylabel("events per bin")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def save_fit_figure(path, spectrum, model_curves):
    """Measured spectrum with fitted per-species and total densities."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5), layout="constrained")
    ax.errorbar(spectrum.dp / KEV_C, spectrum.density * KEV_C,
                yerr=None if spectrum.errors is None else spectrum.errors * KEV_C,
                fmt="o", markersize=2.5, linewidth=0.8, color="black",
                label="measured")
    for label, dp, density in model_curves:
        ax.plot(np.asarray(dp) / KEV_C, np.asarray(density) * KEV_C, label=label)
    ax.set_xlabel("impulse (keV/c)")
    ax.set_ylabel("rate density (events / s / (keV/c))")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, path)
