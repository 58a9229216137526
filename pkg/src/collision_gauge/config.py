"""Run configuration: a single JSON file, strict SI with unit-suffixed keys.

A configuration has sections ``species`` (list), ``sensor``, ``mode``,
``readout``, ``grid``, and ``run``; each subcommand requires only the
sections it uses.  Values are strict SI, and the key name carries the
unit so a file is readable without a manual: ``radius_m``,
``temperature_k``, ``pressure_pa``, ``duration_s``.  Two convenience
suffixes are converted at parse time and nowhere else: ``_kevc`` for
momenta (1 keV/c = 5.344286e-25 kg m/s) and ``_hz`` for frequencies,
which are angular (``_rad_s``) internally.  Exactly one spelling of a
quantity may appear; giving both ``frequency_hz`` and
``frequency_rad_s`` is an error rather than a silent preference.

Every validation error names the offending key path
(``species[0].mass_kg``, ``sensor.accommodation``) so a failing run can
be fixed without reading source.
"""
import hashlib
import json
import math

from .constants import ATOMIC_MASS, KEV_C
from .errors import ConfigError
from .kinetics import GasSpecies, GridSpec, SensorGeometry
from .noise import MechanicalMode, NoiseSpectrum, ReadoutConfig

_MISSING = object()
_TWO_PI = 2.0 * math.pi

MOMENTUM_SUFFIXES = (("_si", 1.0), ("_kevc", KEV_C))
FREQUENCY_SUFFIXES = (("_rad_s", 1.0), ("_hz", _TWO_PI))


def load_config(path):
    """Read and minimally shape-check a JSON configuration file."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return cfg


def config_hash(cfg):
    """SHA-256 of the canonical (sorted, compact) JSON serialization."""
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def section(cfg, name, required=True):
    value = cfg.get(name)
    if value is None:
        if required:
            raise ConfigError(f"missing required section '{name}'")
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{name}: expected a JSON object")
    return value


def _check_number(value, path, minimum=None, maximum=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{path}: must be finite, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{path}: must be <= {maximum}, got {value}")
    return value


def get_number(sect, key, path, default=_MISSING, minimum=None, maximum=None):
    if key not in sect:
        if default is _MISSING:
            raise ConfigError(f"{path}.{key}: required key missing")
        return default
    return _check_number(sect[key], f"{path}.{key}", minimum, maximum)


def get_int(sect, key, path, default=_MISSING, minimum=None):
    if key not in sect:
        if default is _MISSING:
            raise ConfigError(f"{path}.{key}: required key missing")
        return default
    value = sect[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}.{key}: must be >= {minimum}, got {value}")
    return value


def get_string(sect, key, path, default=_MISSING, choices=None):
    if key not in sect:
        if default is _MISSING:
            raise ConfigError(f"{path}.{key}: required key missing")
        return default
    value = sect[key]
    if not isinstance(value, str):
        raise ConfigError(f"{path}.{key}: expected a string, got {value!r}")
    if choices is not None and value not in choices:
        allowed = ", ".join(repr(c) for c in choices)
        raise ConfigError(f"{path}.{key}: expected one of {allowed}, got {value!r}")
    return value


def pick_scaled(sect, path, base, suffixes, default=_MISSING, minimum=None,
                maximum=None):
    """Fetch ``base`` under exactly one unit suffix, converted to SI."""
    present = [(base + suf, scale) for suf, scale in suffixes if base + suf in sect]
    if len(present) > 1:
        keys = " and ".join(f"'{k}'" for k, _ in present)
        raise ConfigError(f"{path}: give only one of {keys}")
    if not present:
        if default is _MISSING:
            keys = ", ".join(f"'{base}{suf}'" for suf, _ in suffixes)
            raise ConfigError(f"{path}: missing {base}; provide one of {keys}")
        return default
    key, scale = present[0]
    return scale * _check_number(sect[key], f"{path}.{key}", minimum, maximum)


def parse_species_list(cfg):
    entries = cfg.get("species")
    if not isinstance(entries, list) or not entries:
        raise ConfigError("species: expected a non-empty list of species objects")
    out = []
    for i, entry in enumerate(entries):
        path = f"species[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        name = entry.get("name", f"species{i}")
        if not isinstance(name, str):
            raise ConfigError(f"{path}.name: expected a string")
        has_kg, has_amu = "mass_kg" in entry, "mass_amu" in entry
        if has_kg and has_amu:
            raise ConfigError(f"{path}: give only one of 'mass_kg' and 'mass_amu'")
        if has_kg:
            mass = get_number(entry, "mass_kg", path, minimum=0.0)
        elif has_amu:
            mass = get_number(entry, "mass_amu", path, minimum=0.0) * ATOMIC_MASS
        else:
            raise ConfigError(
                f"{path}: missing mass; provide 'mass_kg' or 'mass_amu'")
        if mass <= 0.0:
            raise ConfigError(f"{path}: mass must be positive")
        temperature = get_number(entry, "temperature_k", path, minimum=0.0)
        accommodation = entry.get("accommodation")
        if accommodation is not None:
            accommodation = get_number(entry, "accommodation", path,
                                       minimum=0.0, maximum=1.0)
        has_n, has_p = "density_m3" in entry, "pressure_pa" in entry
        if has_n and has_p:
            raise ConfigError(
                f"{path}: give only one of 'density_m3' and 'pressure_pa'")
        if has_n:
            density = get_number(entry, "density_m3", path, minimum=0.0)
            species = GasSpecies(name, mass, temperature, density, accommodation)
        elif has_p:
            pressure = get_number(entry, "pressure_pa", path, minimum=0.0)
            species = GasSpecies.from_pressure(name, mass, temperature, pressure,
                                               accommodation)
        else:
            raise ConfigError(
                f"{path}: missing abundance; provide 'density_m3' or 'pressure_pa'")
        out.append(species)
    return out


def parse_sensor(cfg):
    sect = section(cfg, "sensor")
    path = "sensor"
    accommodation = get_number(sect, "accommodation", path, minimum=0.0, maximum=1.0)
    readout = get_string(sect, "readout", path, default="full_3d",
                         choices=("full_3d", "projected_axis"))
    surface_t = sect.get("surface_temperature_k")
    if surface_t is not None:
        surface_t = get_number(sect, "surface_temperature_k", path, minimum=0.0)
    has_r, has_a = "radius_m" in sect, "area_m2" in sect
    if has_r and has_a:
        raise ConfigError(f"{path}: give only one of 'radius_m' and 'area_m2'")
    if has_r:
        radius = get_number(sect, "radius_m", path, minimum=0.0)
        return SensorGeometry.sphere(radius, accommodation, readout, surface_t)
    if has_a:
        if readout == "projected_axis":
            raise ConfigError(
                f"{path}.readout: projected_axis needs a sphere; give 'radius_m'")
        area = get_number(sect, "area_m2", path, minimum=0.0)
        return SensorGeometry.plate(area, accommodation, surface_t)
    raise ConfigError(f"{path}: missing geometry; provide 'radius_m' or 'area_m2'")


def parse_mode(cfg):
    sect = section(cfg, "mode")
    path = "mode"
    frequency = pick_scaled(sect, path, "frequency", FREQUENCY_SUFFIXES, minimum=0.0)
    bath = get_number(sect, "bath_temperature_k", path, default=300.0, minimum=0.0)

    has_mass, has_radius = "mass_kg" in sect, "radius_m" in sect
    if has_mass and has_radius:
        raise ConfigError(f"{path}: give only one of 'mass_kg' and 'radius_m'")
    if has_mass:
        mass = get_number(sect, "mass_kg", path, minimum=0.0)
    elif has_radius:
        radius = get_number(sect, "radius_m", path, minimum=0.0)
        density = get_number(sect, "density_kgm3", path, default=2200.0, minimum=0.0)
        mass = (4.0 / 3.0) * math.pi * radius**3 * density
    else:
        raise ConfigError(f"{path}: missing mass; provide 'mass_kg' or 'radius_m'")

    damping = pick_scaled(sect, path, "damping", FREQUENCY_SUFFIXES,
                          default=None, minimum=0.0)
    has_q = "quality_factor" in sect
    if has_q and damping is not None:
        raise ConfigError(
            f"{path}: give only one of 'quality_factor' and 'damping_rad_s'/'damping_hz'")
    if has_q:
        q = get_number(sect, "quality_factor", path, minimum=0.0)
        if q <= 0.0 or frequency <= 0.0:
            raise ConfigError(
                f"{path}.quality_factor: needs a positive value and a positive frequency")
        damping = frequency / q
    if damping is None:
        damping = 0.0
    return MechanicalMode(mass, frequency, damping, bath)


def parse_tunings(cfg):
    """Readout balance frequencies: a single value or a sweep list."""
    sect = section(cfg, "readout")
    path = "readout"
    single = pick_scaled(sect, path, "balance_frequency", FREQUENCY_SUFFIXES,
                         default=None, minimum=0.0)
    sweeps = [("tunings" + suf, scale)
              for suf, scale in FREQUENCY_SUFFIXES if "tunings" + suf in sect]
    if len(sweeps) > 1:
        raise ConfigError(f"{path}: give only one of 'tunings_rad_s' and 'tunings_hz'")
    if single is not None and sweeps:
        raise ConfigError(
            f"{path}: give either 'balance_frequency_*' or 'tunings_*', not both")
    if single is not None:
        return [ReadoutConfig(single)]
    if sweeps:
        key, scale = sweeps[0]
        raw = sect[key]
        if not isinstance(raw, list) or not raw:
            raise ConfigError(f"{path}.{key}: expected a non-empty list of numbers")
        return [ReadoutConfig(scale * _check_number(v, f"{path}.{key}[{i}]", 0.0))
                for i, v in enumerate(raw)]
    raise ConfigError(
        f"{path}: missing tuning; provide 'balance_frequency_rad_s', "
        f"'balance_frequency_hz', or a 'tunings_*' list")


def parse_technical_psd(cfg):
    sect = section(cfg, "readout", required=False)
    return get_number(sect, "technical_force_psd_si", "readout",
                      default=0.0, minimum=0.0)


def parse_impulse(cfg):
    sect = section(cfg, "readout")
    return pick_scaled(sect, "readout", "impulse", MOMENTUM_SUFFIXES, minimum=0.0)


def build_noise(cfg, readout=None):
    """Assemble the force-noise model from mode and readout sections."""
    mode = parse_mode(cfg)
    if readout is None:
        tunings = parse_tunings(cfg)
        if len(tunings) != 1:
            raise ConfigError(
                "readout: this command needs a single 'balance_frequency_*'")
        readout = tunings[0]
    return NoiseSpectrum(mode, readout, parse_technical_psd(cfg))


def parse_grid(cfg):
    sect = section(cfg, "grid")
    path = "grid"
    lo = pick_scaled(sect, path, "lo", MOMENTUM_SUFFIXES, default=0.0, minimum=0.0)
    hi = pick_scaled(sect, path, "hi", MOMENTUM_SUFFIXES, minimum=0.0)
    count = get_int(sect, "count", path, default=200, minimum=2)
    spacing = get_string(sect, "spacing", path, default="linear",
                         choices=("linear", "log"))
    return GridSpec(lo, hi, count, spacing)
