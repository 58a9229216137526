"""Delimited tables and JSON sidecars for tool outputs.

Every data file the command-line tools write is a comma-separated table
whose floating-point fields use ``repr`` formatting, so values survive a
write/read round trip exactly and rerunning a command produces
byte-identical files.  Next to each table sits a ``<name>.meta.json``
sidecar recording provenance: tool, version, subcommand, configuration
hash, seed, and the parameters the writer actually used.  Sidecars carry
no timestamps; two runs of the same configuration are indistinguishable
by design.

Table schemas (all values strict SI):

* spectrum:  ``dp_si,rate_density_si`` plus ``error_si`` for histogram
  estimates
* noise:     ``nu_si,s_ff_si`` plus one column per component
* events:    ``t_si,dp_si,kind,species`` plus ``axis_dp_si`` for
  projected-axis readout (``dp_si`` stays the full transfer magnitude)
* detected:  the event schema plus ``snr``; ``kind`` is ``detected`` and
  ``species`` is empty because the detector cannot attribute events
"""
import csv
import json
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError
from .kinetics import MomentumSpectrum
from .montecarlo import KIND_LABELS, EventStream

TOOL_NAME = "collision-gauge"


def _fmt(value):
    if isinstance(value, str):
        return value
    return repr(float(value))


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_table(path, header, columns):
    """Write equal-length ``columns`` under ``header`` as CSV."""
    if len(header) != len(columns):
        raise ValueError("one column per header name required")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([_fmt(v) for v in row])


def read_table(path):
    """Read a CSV written by write_table; returns (header, columns of str)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty table") from None
        rows = list(reader)
    columns = {name: [row[i] for row in rows] for i, name in enumerate(header)}
    return header, columns


def _float_column(columns, name, path):
    if name not in columns:
        raise ConfigError(f"{path}: missing column '{name}'")
    return np.array([float(v) for v in columns[name]], dtype=float)


def write_json(path, payload):
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2)
    with open(path, "w") as fh:
        fh.write(text + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def sidecar_path(data_path):
    return Path(str(data_path) + ".meta.json")


def write_sidecar(data_path, command, *, config_sha256=None, seed=None,
                  parameters=None):
    write_json(sidecar_path(data_path), {
        "tool": TOOL_NAME,
        "version": __version__,
        "command": command,
        "config_sha256": config_sha256,
        "seed": seed,
        "parameters": parameters or {},
    })


def read_sidecar(data_path):
    path = sidecar_path(data_path)
    return read_json(path) if path.exists() else None


def write_spectrum(path, spectrum: MomentumSpectrum, command, *,
                   config_sha256=None, seed=None, extra=None):
    header = ["dp_si", "rate_density_si"]
    columns = [spectrum.dp, spectrum.density]
    if spectrum.errors is not None:
        header.append("error_si")
        columns.append(spectrum.errors)
    write_table(path, header, columns)
    parameters = dict(spectrum.metadata)
    if spectrum.bin_edges is not None:
        parameters["bin_edges_si"] = spectrum.bin_edges
    parameters.update(extra or {})
    write_sidecar(path, command, config_sha256=config_sha256, seed=seed,
                  parameters=parameters)


def read_spectrum(path) -> MomentumSpectrum:
    _, columns = read_table(path)
    dp = _float_column(columns, "dp_si", path)
    density = _float_column(columns, "rate_density_si", path)
    errors = _float_column(columns, "error_si", path) if "error_si" in columns else None
    sidecar = read_sidecar(path) or {}
    parameters = dict(sidecar.get("parameters", {}))
    edges = parameters.pop("bin_edges_si", None)
    return MomentumSpectrum(
        dp=dp, density=density, errors=errors,
        bin_edges=None if edges is None else np.asarray(edges, dtype=float),
        metadata=parameters)


def write_noise_curve(path, nu, noise, command, *, config_sha256=None,
                      extra=None):
    nu = np.asarray(nu, dtype=float)
    write_table(
        path,
        ["nu_si", "s_ff_si", "shot_si", "backaction_si", "technical_si"],
        [nu, noise.total(nu), noise.shot(nu), noise.backaction(nu),
         noise.technical_floor(nu)])
    write_sidecar(path, command, config_sha256=config_sha256,
                  parameters=extra or {})


def write_events(path, stream: EventStream, command, *, config_sha256=None,
                 extra=None):
    header = ["t_si", "dp_si", "kind", "species"]
    columns = [
        stream.times,
        stream.impulses,
        [KIND_LABELS[k] for k in stream.kinds],
        [stream.species_names[i] for i in stream.species_index],
    ]
    if stream.axis_impulses is not None:
        header.append("axis_dp_si")
        columns.append(stream.axis_impulses)
    write_table(path, header, columns)
    parameters = {
        "duration_s": stream.duration,
        "n_events": len(stream),
        "species": list(stream.species_names),
        "readout": stream.sensor.readout,
    }
    parameters.update(extra or {})
    write_sidecar(path, command, config_sha256=config_sha256,
                  seed=stream.seed, parameters=parameters)


def read_events(path):
    """Read an event table (truth or detected) plus its sidecar.

    Returns a dict with times, impulses, kind and species labels,
    optional axis impulses and SNRs, and the sidecar payload (or None).
    """
    _, columns = read_table(path)
    out = {
        "times": _float_column(columns, "t_si", path),
        "impulses": _float_column(columns, "dp_si", path),
        "kinds": list(columns.get("kind", [])),
        "species": list(columns.get("species", [])),
        "axis_impulses": (_float_column(columns, "axis_dp_si", path)
                          if "axis_dp_si" in columns else None),
        "snr": (_float_column(columns, "snr", path)
                if "snr" in columns else None),
        "sidecar": read_sidecar(path),
    }
    return out


def write_detected(path, detected, command, *, config_sha256=None, seed=None,
                   extra=None):
    times = [d.time for d in detected]
    impulses = [d.impulse for d in detected]
    snrs = [d.snr for d in detected]
    write_table(
        path,
        ["t_si", "dp_si", "kind", "species", "snr"],
        [times, impulses, ["detected"] * len(times), [""] * len(times), snrs])
    write_sidecar(path, command, config_sha256=config_sha256, seed=seed,
                  parameters=extra or {})
