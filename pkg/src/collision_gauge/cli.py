"""Command-line front end.

    collision-gauge <spectrum|snr|simulate-detect|infer>
        --config <path> [--seed N] [--out DIR] [--no-figures]

Subcommands are deterministic given (config, seed): rerunning one writes
byte-identical tables, sidecars, and figures.  Output goes to --out if
given, else to $COLLISION_GAUGE_OUTDIR, else to the working directory.
Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O failure.

* ``spectrum``        tabulates the collision rate density for a gas
  mixture on a sensor, optionally splitting the surface-model routes
  and marking the detection threshold implied by a noise model.
* ``snr``             evaluates impulse signal-to-noise for one or more
  readout tunings and exports the integrand and noise curves.
* ``simulate-detect`` draws a collision event stream, synthesizes the
  noisy force record, runs the matched filter, and reports detection
  efficiency, fake rate, and amplitude bias against the ground truth.
* ``infer``           turns a detected rate or an event file into a
  pressure estimate, or a multi-species event file into partial
  pressures.
"""
import argparse
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    MOMENTUM_SUFFIXES,
    build_noise,
    config_hash,
    get_int,
    get_number,
    get_string,
    load_config,
    parse_grid,
    parse_impulse,
    parse_mode,
    parse_sensor,
    parse_species_list,
    parse_technical_psd,
    parse_tunings,
    pick_scaled,
    section,
)
from .constants import KEV_C
from .detection import (
    apply_filter,
    detect_impulses,
    match_pairs,
    matched_filter_kernel,
    robust_sigma,
    synthesize_trace,
)
from .errors import (
    ConfigError,
    DomainError,
    NumericsError,
    UnsupportedConfigurationError,
)
from .inference import fit_mixture, pressure_from_rate
from .io import (
    read_events,
    write_detected,
    write_events,
    write_json,
    write_noise_curve,
    write_sidecar,
    write_spectrum,
    write_table,
)
from .kinetics import GridSpec, mixture_total_rate, tabulate_spectrum
from .montecarlo import histogram_spectrum, sample_event_stream
from .noise import NoiseSpectrum, impulse_snr, min_detectable_impulse

ENV_OUTDIR = "COLLISION_GAUGE_OUTDIR"

# namespace tag separating the trace-noise RNG stream from the
# per-species event streams seeded with (seed, species, chunk)
_TRACE_STREAM = 0x74726163


def _outdir(args):
    target = args.out or os.environ.get(ENV_OUTDIR) or "."
    path = Path(target)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _say_wrote(path):
    print(f"wrote {path}")


def _run_section(cfg):
    return section(cfg, "run", required=False)


def _resolve_seed(cfg, args, required):
    if args.seed is not None:
        return args.seed
    run = _run_section(cfg)
    seed = get_int(run, "seed", "run", default=None)
    if seed is None and required:
        raise ConfigError("run.seed: required for this command (or pass --seed)")
    return seed


def _gaussian_exceedance(threshold):
    return 0.5 * math.erfc(threshold / math.sqrt(2.0))


def _detection_cutoff(cfg, run):
    """Impulse threshold for inference: explicit run key, else the
    minimum detectable impulse of the configured noise model, else 0."""
    dp_min = pick_scaled(run, "run", "dp_min", MOMENTUM_SUFFIXES,
                         default=None, minimum=0.0)
    if dp_min is not None:
        return dp_min
    if "mode" in cfg and "readout" in cfg:
        threshold = get_number(run, "snr_threshold", "run", default=5.0, minimum=0.0)
        return min_detectable_impulse(build_noise(cfg), snr_target=threshold)
    return 0.0


def cmd_spectrum(cfg, cfg_hash, args):
    species = parse_species_list(cfg)
    sensor = parse_sensor(cfg)
    grid = parse_grid(cfg)
    run = _run_section(cfg)
    scatter = get_string(run, "scatter", "run", default="mixture",
                         choices=("mixture", "split"))
    outdir = _outdir(args)

    curves = [("mixture", tabulate_spectrum(species, sensor, grid))]
    if scatter == "split":
        plain = [replace(sp, accommodation=None) for sp in species]
        for label, alpha in (("specular", 0.0), ("diffuse", 1.0)):
            forced = replace(sensor, accommodation=alpha)
            curves.append((label, tabulate_spectrum(plain, forced, grid)))

    markers = {}
    if "mode" in cfg and "readout" in cfg:
        threshold = get_number(run, "snr_threshold", "run", default=5.0, minimum=0.0)
        dp_min = min_detectable_impulse(build_noise(cfg), snr_target=threshold)
        markers["detection threshold"] = dp_min
        print(f"detection threshold: {dp_min / KEV_C:.6g} keV/c "
              f"(SNR {threshold:g})")

    for label, spectrum in curves:
        name = "spectrum.csv" if label == "mixture" else f"spectrum_{label}.csv"
        path = outdir / name
        extra = {"curve": label}
        if markers:
            extra["dp_min_si"] = markers["detection threshold"]
        write_spectrum(path, spectrum, "spectrum", config_sha256=cfg_hash,
                       extra=extra)
        _say_wrote(path)

    rate = mixture_total_rate(0.0, species, sensor)
    print(f"total collision rate: {rate:.6g} events/s")

    if args.figures:
        from . import plots
        _say_wrote(plots.save_spectrum_figure(
            outdir / "spectrum.png", curves, markers))
    return 0


def cmd_snr(cfg, cfg_hash, args):
    mode = parse_mode(cfg)
    tunings = parse_tunings(cfg)
    technical = parse_technical_psd(cfg)
    dp = parse_impulse(cfg)
    outdir = _outdir(args)

    models = [NoiseSpectrum(mode, tuning, technical) for tuning in tunings]
    scales = sorted(s for m in models for s in m.frequency_scales())
    nu = np.geomspace(scales[0] / 100.0, scales[-1] * 100.0, 2000)

    labels, snrs, integrands = [], [], []
    for tuning, noise in zip(tunings, models):
        f0 = tuning.balance_frequency / (2.0 * math.pi)
        label = f"omega0/2pi = {f0:.6g} Hz"
        snr = impulse_snr(dp, noise)
        labels.append(label)
        snrs.append(snr)
        integrands.append(dp**2 / noise.total(nu))
        print(f"{label}: SNR = {snr:.6g}")

    snr_path = outdir / "snr.csv"
    write_table(snr_path, ["balance_frequency_si", "snr"],
                [[t.balance_frequency for t in tunings], snrs])
    write_sidecar(snr_path, "snr", config_sha256=cfg_hash,
                  parameters={"impulse_si": dp, "impulse_kevc": dp / KEV_C})
    _say_wrote(snr_path)

    integrand_path = outdir / "snr_integrand.csv"
    write_table(integrand_path,
                ["nu_si"] + [f"integrand_{i}_si" for i in range(len(models))],
                [nu] + integrands)
    write_sidecar(integrand_path, "snr", config_sha256=cfg_hash,
                  parameters={"impulse_si": dp,
                              "tunings_si": [t.balance_frequency for t in tunings]})
    _say_wrote(integrand_path)

    for i, noise in enumerate(models):
        noise_path = outdir / f"noise_{i}.csv"
        write_noise_curve(noise_path, nu, noise, "snr", config_sha256=cfg_hash,
                          extra={"balance_frequency_si": tunings[i].balance_frequency})
        _say_wrote(noise_path)

    if args.figures:
        from . import plots
        _say_wrote(plots.save_integrand_figure(
            outdir / "snr_integrand.png", nu,
            list(zip(labels, integrands))))
        _say_wrote(plots.save_noise_figure(
            outdir / "noise.png", nu,
            [(label, noise.total(nu)) for label, noise in zip(labels, models)]))
    return 0


def cmd_simulate_detect(cfg, cfg_hash, args):
    species = parse_species_list(cfg)
    sensor = parse_sensor(cfg)
    noise = build_noise(cfg)
    run = _run_section(cfg)
    seed = _resolve_seed(cfg, args, required=True)
    duration = get_number(run, "duration_s", "run", minimum=0.0)
    sample_rate = get_number(run, "sample_rate_hz", "run", minimum=0.0)
    threshold = get_number(run, "snr_threshold", "run", default=5.0, minimum=0.0)
    kernel_length = get_int(run, "kernel_length", "run", default=4096, minimum=2)
    two_sided_default = sensor.readout == "projected_axis"
    two_sided = bool(run.get("two_sided", two_sided_default))
    outdir = _outdir(args)

    stream = sample_event_stream(duration, species, sensor, seed=seed)
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence((seed, _TRACE_STREAM))))
    trace = synthesize_trace(stream, noise, sample_rate, duration, rng=rng)
    kernel = matched_filter_kernel(noise, sample_rate, length=kernel_length)
    detected = detect_impulses(trace, kernel, snr_threshold=threshold,
                               two_sided=two_sided)

    window = get_number(run, "match_window_s", "run",
                        default=kernel.dead_time, minimum=0.0)
    pairs = match_pairs(stream.times, [d.time for d in detected], window)
    truth_dp = stream.analysis_impulses
    dp_threshold = threshold * kernel.predicted_sigma
    above = truth_dp >= dp_threshold
    matched_truth = np.zeros(len(stream), dtype=bool)
    for i, _ in pairs:
        matched_truth[i] = True

    n_above = int(above.sum())
    n_matched_above = int((matched_truth & above).sum())
    efficiency = (n_matched_above / n_above) if n_above else None
    n_fake = len(detected) - len(pairs)
    fake_rate = n_fake / duration if duration > 0 else None

    bias_pairs = [(truth_dp[i], abs(detected[j].impulse))
                  for i, j in pairs if above[i]]
    if bias_pairs:
        ratios = [est / truth for truth, est in bias_pairs]
        amplitude_bias = float(np.mean(ratios)) - 1.0
    else:
        amplitude_bias = None

    filtered_sigma = robust_sigma(apply_filter(trace, kernel))
    exceedance = _gaussian_exceedance(threshold) * (2.0 if two_sided else 1.0)

    events_path = outdir / "events.csv"
    write_events(events_path, stream, "simulate-detect", config_sha256=cfg_hash)
    _say_wrote(events_path)

    detected_path = outdir / "detected.csv"
    write_detected(detected_path, detected, "simulate-detect",
                   config_sha256=cfg_hash, seed=seed,
                   extra={
                       "duration_s": duration,
                       "sample_rate_hz": sample_rate,
                       "snr_threshold": threshold,
                       "two_sided": two_sided,
                       "dp_threshold_si": dp_threshold,
                   })
    _say_wrote(detected_path)

    report = {
        "n_truth": len(stream),
        "n_truth_above_threshold": n_above,
        "n_detected": len(detected),
        "n_matched": len(pairs),
        "n_matched_above_threshold": n_matched_above,
        "n_fake": n_fake,
        "efficiency_above_threshold": efficiency,
        "fake_rate_hz": fake_rate,
        "gaussian_exceedance_rate_hz": exceedance * sample_rate,
        "amplitude_bias": amplitude_bias,
        "dp_threshold_si": dp_threshold,
        "dp_threshold_kevc": dp_threshold / KEV_C,
        "filtered_sigma_si": filtered_sigma,
        "predicted_sigma_si": kernel.predicted_sigma,
        "match_window_s": window,
        "trace": {
            "n_samples": len(trace.samples),
            "sample_rate_hz": sample_rate,
            "duration_s": duration,
        },
    }
    report_path = outdir / "report.json"
    write_json(report_path, report)
    write_sidecar(report_path, "simulate-detect", config_sha256=cfg_hash, seed=seed)
    _say_wrote(report_path)

    print(f"truth events: {len(stream)} ({n_above} above threshold)")
    print(f"detected: {len(detected)} (matched {len(pairs)}, fake {n_fake})")
    if efficiency is not None:
        print(f"efficiency above threshold: {efficiency:.4f}")
    if amplitude_bias is not None:
        print(f"amplitude bias: {amplitude_bias:+.4%}")

    if args.figures:
        from . import plots
        _say_wrote(plots.save_trace_figure(
            outdir / "trace.png", trace.times(), trace.samples,
            stream.times, [d.time for d in detected]))
        _say_wrote(plots.save_amplitude_figure(
            outdir / "amplitudes.png", truth_dp,
            [d.impulse for d in detected], threshold=dp_threshold))
    return 0


def _load_event_input(cfg, run, config_path):
    """Resolve run.events_file (relative to the config file) and read it."""
    name = run.get("events_file")
    if not isinstance(name, str) or not name:
        raise ConfigError("run.events_file: expected a file path")
    path = Path(name)
    if not path.is_absolute():
        path = Path(config_path).parent / path
    if not path.exists():
        raise ConfigError(f"run.events_file: no such file: {path}")
    data = read_events(path)
    sidecar = data.get("sidecar") or {}
    duration = (sidecar.get("parameters") or {}).get("duration_s")
    if duration is None:
        duration = get_number(run, "duration_s", "run", default=None, minimum=0.0)
    if duration is None:
        raise ConfigError(
            "run.duration_s: required (events file has no duration in its sidecar)")
    return data, float(duration)


def cmd_infer(cfg, cfg_hash, args):
    species = parse_species_list(cfg)
    sensor = parse_sensor(cfg)
    run = _run_section(cfg)
    outdir = _outdir(args)
    dp_min = _detection_cutoff(cfg, run)

    has_rate = "rate_hz" in run
    has_events = "events_file" in run
    if has_rate and has_events:
        raise ConfigError("run: give only one of 'rate_hz' and 'events_file'")
    if not has_rate and not has_events:
        raise ConfigError("run: provide 'rate_hz' or 'events_file'")

    fit = None
    spectrum = None
    if has_rate:
        if len(species) > 1:
            raise ConfigError(
                "run.rate_hz: supports a single species; "
                "mixture fitting needs 'events_file'")
        rate = get_number(run, "rate_hz", "run", minimum=0.0)
        n_events = get_int(run, "n_events", "run", default=None, minimum=1)
        estimate = pressure_from_rate(rate, dp_min, species[0], sensor,
                                      n_events=n_events)
        report = _estimate_report(estimate)
    else:
        data, duration = _load_event_input(cfg, run, args.config)
        impulses = data["impulses"] if data["axis_impulses"] is None \
            else np.abs(data["axis_impulses"])
        n = len(impulses)
        if n == 0:
            raise ConfigError("run.events_file: file contains no events")
        bins = get_int(run, "bins", "run", default=100, minimum=2)
        if len(species) == 1:
            rate = n / duration
            estimate = pressure_from_rate(rate, dp_min, species[0], sensor,
                                          n_events=n)
            report = _estimate_report(estimate)
        else:
            spectrum = histogram_spectrum(impulses, duration, bins=bins)
            fit = fit_mixture(spectrum, species, sensor,
                              dp_min=dp_min if dp_min > 0.0 else None)
            report = fit.report()
            report["kind"] = "mixture_fit"
            report["dp_min_si"] = dp_min

    cutoff = report.get("inputs", {}).get("cutoff_factor")
    if cutoff is not None and cutoff < 0.01:
        print(f"warning: only {100 * cutoff:.2g}% of the collision spectrum "
              f"lies above the threshold; the estimate is a strong "
              f"extrapolation", file=sys.stderr)

    text = json.dumps(report, sort_keys=True, indent=2)
    print(text)
    infer_path = outdir / "infer.json"
    write_json(infer_path, report)
    write_sidecar(infer_path, "infer", config_sha256=cfg_hash)
    _say_wrote(infer_path)

    if args.figures and fit is not None and spectrum is not None:
        from . import plots
        grid = GridSpec(float(spectrum.dp[0]), float(spectrum.dp[-1]), 300)
        curves = []
        fitted = [sp.with_density(n_fit)
                  for sp, n_fit in zip(species, fit.densities)]
        for sp in fitted:
            table = tabulate_spectrum([sp], sensor, grid)
            curves.append((sp.name, table.dp, table.density))
        total = tabulate_spectrum(fitted, sensor, grid)
        curves.append(("total", total.dp, total.density))
        _say_wrote(plots.save_fit_figure(outdir / "fit.png", spectrum, curves))
    return 0


def _estimate_report(estimate):
    return {
        "kind": "pressure_estimate",
        "pressure_pa": estimate.pressure,
        "sigma_pa": estimate.sigma,
        "relative_uncertainty": estimate.relative_uncertainty,
        "primary": estimate.primary,
        "inputs": estimate.inputs,
    }


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "snr": cmd_snr,
    "simulate-detect": cmd_simulate_detect,
    "infer": cmd_infer,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="collision-gauge",
        description="Collision-resolved pressure sensing toolkit.")
    parser.add_argument("--version", action="version",
                        version=f"collision-gauge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("spectrum", "tabulate the collision rate density"),
        ("snr", "impulse signal-to-noise for readout tunings"),
        ("simulate-detect", "simulate events, synthesize the record, detect"),
        ("infer", "pressure or partial pressures from rates or events"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="JSON configuration file")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override run.seed from the config")
        cmd.add_argument("--out", default=None,
                         help=f"output directory (default ${ENV_OUTDIR} or '.')")
        cmd.add_argument("--no-figures", dest="figures", action="store_false",
                         help="skip rendering figures next to the tables")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return _COMMANDS[args.command](cfg, config_hash(cfg), args)
    except (ConfigError, DomainError, UnsupportedConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
