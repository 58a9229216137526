"""File formats, sidecars, and configuration parsing."""
import json
import math

import numpy as np
import pytest

from collision_gauge import (
    ConfigError,
    GasSpecies,
    KEV_C,
    MomentumSpectrum,
    SensorGeometry,
    amu_to_kg,
    sample_event_stream,
    tabulate_spectrum,
)
from collision_gauge import config as cfgmod
from collision_gauge import io as iomod
from collision_gauge.kinetics import GridSpec


@pytest.fixture
def h2():
    return GasSpecies.from_amu("H2", 2.016, 300.0, 1e13)


@pytest.fixture
def sphere():
    return SensorGeometry.sphere(50e-9, 0.3)


class TestTables:
    def test_float_round_trip_is_exact(self, tmp_path):
        path = tmp_path / "t.csv"
        values = [0.1, 1e-300, 7.234915e-25, math.pi, 3.0, 1e308]
        iomod.write_table(path, ["a"], [values])
        _, columns = iomod.read_table(path)
        assert [float(v) for v in columns["a"]] == values

    def test_mixed_string_column(self, tmp_path):
        path = tmp_path / "t.csv"
        iomod.write_table(path, ["x", "label"], [[1.5, 2.5], ["one", "two"]])
        header, columns = iomod.read_table(path)
        assert header == ["x", "label"]
        assert columns["label"] == ["one", "two"]

    def test_header_column_mismatch(self, tmp_path):
        with pytest.raises(ValueError):
            iomod.write_table(tmp_path / "t.csv", ["a", "b"], [[1.0]])

    def test_json_handles_numpy_types(self, tmp_path):
        path = tmp_path / "r.json"
        iomod.write_json(path, {
            "a": np.float64(0.25), "b": np.int32(7),
            "c": np.array([1.0, 2.0]), "d": [np.float64(3.5)],
        })
        back = iomod.read_json(path)
        assert back == {"a": 0.25, "b": 7, "c": [1.0, 2.0], "d": [3.5]}


class TestSidecars:
    def test_sidecar_naming_and_payload(self, tmp_path):
        data = tmp_path / "out.csv"
        iomod.write_table(data, ["a"], [[1.0]])
        iomod.write_sidecar(data, "spectrum", config_sha256="ab12", seed=9,
                           parameters={"n": 1})
        side = iomod.read_sidecar(data)
        assert iomod.sidecar_path(data).name == "out.csv.meta.json"
        assert side["tool"] == "collision-gauge"
        assert side["command"] == "spectrum"
        assert side["config_sha256"] == "ab12"
        assert side["seed"] == 9
        assert side["parameters"] == {"n": 1}
        assert "version" in side

    def test_sidecar_has_no_timestamp(self, tmp_path):
        data = tmp_path / "out.csv"
        iomod.write_table(data, ["a"], [[1.0]])
        iomod.write_sidecar(data, "snr")
        text = iomod.sidecar_path(data).read_text()
        assert "time" not in text and "date" not in text

    def test_missing_sidecar_reads_none(self, tmp_path):
        data = tmp_path / "lonely.csv"
        iomod.write_table(data, ["a"], [[1.0]])
        assert iomod.read_sidecar(data) is None


class TestSpectrumFiles:
    def test_analytic_round_trip(self, tmp_path, h2, sphere):
        grid = GridSpec(0.0, 20 * h2.thermal_momentum, 50)
        spectrum = tabulate_spectrum([h2], sphere, grid)
        path = tmp_path / "spectrum.csv"
        iomod.write_spectrum(path, spectrum, "spectrum", config_sha256="x")
        back = iomod.read_spectrum(path)
        np.testing.assert_array_equal(back.dp, spectrum.dp)
        np.testing.assert_array_equal(back.density, spectrum.density)
        assert back.errors is None and back.bin_edges is None

    def test_histogram_round_trip_keeps_edges_and_errors(self, tmp_path, h2, sphere):
        centers = np.array([1.0, 3.0, 5.0])
        spectrum = MomentumSpectrum(
            dp=centers, density=np.array([0.5, 0.25, 0.125]),
            errors=np.array([0.05, 0.025, 0.0125]),
            bin_edges=np.array([0.0, 2.0, 4.0, 6.0]),
            metadata={"n_events": 12})
        path = tmp_path / "emp.csv"
        iomod.write_spectrum(path, spectrum, "infer")
        back = iomod.read_spectrum(path)
        np.testing.assert_array_equal(back.errors, spectrum.errors)
        np.testing.assert_array_equal(back.bin_edges, spectrum.bin_edges)
        assert back.metadata["n_events"] == 12

    def test_schema_header(self, tmp_path, h2, sphere):
        grid = GridSpec(0.0, 1e-23, 5)
        path = tmp_path / "spectrum.csv"
        iomod.write_spectrum(path, tabulate_spectrum([h2], sphere, grid), "spectrum")
        assert path.read_text().splitlines()[0] == "dp_si,rate_density_si"


class TestEventFiles:
    def test_round_trip(self, tmp_path, h2, sphere):
        stream = sample_event_stream(20.0, [h2], sphere, seed=3)
        path = tmp_path / "events.csv"
        iomod.write_events(path, stream, "simulate-detect", config_sha256="c")
        back = iomod.read_events(path)
        np.testing.assert_array_equal(back["times"], stream.times)
        np.testing.assert_array_equal(back["impulses"], stream.impulses)
        assert set(back["kinds"]) <= {"specular", "diffuse"}
        assert set(back["species"]) == {"H2"}
        assert back["axis_impulses"] is None
        assert back["sidecar"]["seed"] == 3
        assert back["sidecar"]["parameters"]["duration_s"] == 20.0

    def test_projected_stream_keeps_axis_column(self, tmp_path, h2):
        sensor = SensorGeometry.sphere(50e-9, 0.3, readout="projected_axis")
        stream = sample_event_stream(20.0, [h2], sensor, seed=4)
        path = tmp_path / "events.csv"
        iomod.write_events(path, stream, "simulate-detect")
        back = iomod.read_events(path)
        np.testing.assert_array_equal(back["axis_impulses"], stream.axis_impulses)
        header = path.read_text().splitlines()[0]
        assert header == "t_si,dp_si,kind,species,axis_dp_si"

    def test_detected_schema(self, tmp_path):
        from collision_gauge import DetectedEvent
        detected = [DetectedEvent(0.5, 2e-24, 8.0), DetectedEvent(0.9, 3e-24, 12.0)]
        path = tmp_path / "detected.csv"
        iomod.write_detected(path, detected, "simulate-detect", seed=1)
        header = path.read_text().splitlines()[0]
        assert header == "t_si,dp_si,kind,species,snr"
        back = iomod.read_events(path)
        np.testing.assert_array_equal(back["snr"], [8.0, 12.0])
        assert back["kinds"] == ["detected", "detected"]


class TestConfigBasics:
    def test_invalid_json(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            cfgmod.load_config(path)

    def test_top_level_must_be_object(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="object"):
            cfgmod.load_config(path)

    def test_hash_ignores_key_order(self):
        a = {"x": 1, "y": {"b": 2.0, "a": [1, 2]}}
        b = {"y": {"a": [1, 2], "b": 2.0}, "x": 1}
        assert cfgmod.config_hash(a) == cfgmod.config_hash(b)
        assert cfgmod.config_hash(a) != cfgmod.config_hash({"x": 2})

    def test_bool_is_not_a_number(self):
        with pytest.raises(ConfigError, match="run.x"):
            cfgmod.get_number({"x": True}, "x", "run")

    def test_both_suffixes_rejected(self):
        sect = {"dp_min_si": 1.0, "dp_min_kevc": 1.0}
        with pytest.raises(ConfigError, match="only one"):
            cfgmod.pick_scaled(sect, "run", "dp_min", cfgmod.MOMENTUM_SUFFIXES)

    def test_missing_names_all_spellings(self):
        with pytest.raises(ConfigError, match="dp_min_si.*dp_min_kevc"):
            cfgmod.pick_scaled({}, "run", "dp_min", cfgmod.MOMENTUM_SUFFIXES)


class TestSpeciesParsing:
    def test_full_parse(self):
        cfg = {"species": [{
            "name": "H2", "mass_amu": 2.016, "temperature_k": 300.0,
            "pressure_pa": 1e-10, "accommodation": 0.25,
        }]}
        (sp,) = cfgmod.parse_species_list(cfg)
        assert sp.name == "H2"
        assert sp.mass == amu_to_kg(2.016)
        assert sp.accommodation == 0.25
        assert sp.pressure == pytest.approx(1e-10, rel=1e-12)

    def test_density_spelling(self):
        cfg = {"species": [{"mass_kg": 3e-27, "temperature_k": 300.0,
                            "density_m3": 2e13}]}
        (sp,) = cfgmod.parse_species_list(cfg)
        assert sp.density == 2e13 and sp.name == "species0"

    def test_missing_mass_cites_key(self):
        cfg = {"species": [{"temperature_k": 300.0, "pressure_pa": 1e-10}]}
        with pytest.raises(ConfigError, match=r"species\[0\].*mass_kg.*mass_amu"):
            cfgmod.parse_species_list(cfg)

    def test_missing_abundance_cites_key(self):
        cfg = {"species": [{"mass_amu": 2.0, "temperature_k": 300.0}]}
        with pytest.raises(ConfigError, match=r"density_m3.*pressure_pa"):
            cfgmod.parse_species_list(cfg)

    def test_conflicting_mass_keys(self):
        cfg = {"species": [{"mass_kg": 3e-27, "mass_amu": 2.0,
                            "temperature_k": 300.0, "pressure_pa": 0.0}]}
        with pytest.raises(ConfigError, match="only one"):
            cfgmod.parse_species_list(cfg)

    def test_empty_list_rejected(self):
        with pytest.raises(ConfigError, match="species"):
            cfgmod.parse_species_list({"species": []})

    def test_accommodation_bounds(self):
        cfg = {"species": [{"mass_amu": 2.0, "temperature_k": 300.0,
                            "pressure_pa": 0.0, "accommodation": 1.5}]}
        with pytest.raises(ConfigError, match="accommodation"):
            cfgmod.parse_species_list(cfg)


class TestSensorModeParsing:
    def test_sphere(self):
        sensor = cfgmod.parse_sensor(
            {"sensor": {"radius_m": 50e-9, "accommodation": 0.3}})
        assert sensor.shape == "sphere"
        assert sensor.area == pytest.approx(4 * math.pi * 25e-16, rel=1e-12)

    def test_plate(self):
        sensor = cfgmod.parse_sensor(
            {"sensor": {"area_m2": 1e-13, "accommodation": 1.0}})
        assert sensor.shape == "plate" and sensor.area == 1e-13

    def test_projected_needs_sphere(self):
        with pytest.raises(ConfigError, match="radius_m"):
            cfgmod.parse_sensor({"sensor": {
                "area_m2": 1e-13, "accommodation": 0.0,
                "readout": "projected_axis"}})

    def test_readout_choices(self):
        with pytest.raises(ConfigError, match="sensor.readout"):
            cfgmod.parse_sensor({"sensor": {
                "radius_m": 1e-8, "accommodation": 0.0, "readout": "sideways"}})

    def test_mode_from_radius_and_quality_factor(self):
        mode = cfgmod.parse_mode({"mode": {
            "radius_m": 50e-9, "density_kgm3": 2200.0,
            "frequency_hz": 1000.0, "quality_factor": 1e4,
        }})
        assert mode.mass == pytest.approx(
            (4 / 3) * math.pi * 50e-9**3 * 2200.0, rel=1e-12)
        assert mode.frequency == pytest.approx(2 * math.pi * 1000.0, rel=1e-15)
        assert mode.damping == pytest.approx(mode.frequency / 1e4, rel=1e-12)

    def test_mode_frequency_suffix_exact(self):
        mode = cfgmod.parse_mode({"mode": {
            "mass_kg": 1e-18, "frequency_rad_s": 500.0}})
        assert mode.frequency == 500.0 and mode.damping == 0.0

    def test_quality_factor_needs_frequency(self):
        with pytest.raises(ConfigError, match="quality_factor"):
            cfgmod.parse_mode({"mode": {
                "mass_kg": 1e-18, "frequency_hz": 0.0, "quality_factor": 100.0}})

    def test_damping_and_q_conflict(self):
        with pytest.raises(ConfigError, match="only one"):
            cfgmod.parse_mode({"mode": {
                "mass_kg": 1e-18, "frequency_hz": 100.0,
                "quality_factor": 10.0, "damping_hz": 1.0}})

    def test_missing_section(self):
        with pytest.raises(ConfigError, match="mode"):
            cfgmod.parse_mode({})


class TestReadoutGridParsing:
    def test_single_tuning_hz(self):
        (tuning,) = cfgmod.parse_tunings(
            {"readout": {"balance_frequency_hz": 1000.0}})
        assert tuning.balance_frequency == pytest.approx(2 * math.pi * 1000.0)

    def test_sweep(self):
        tunings = cfgmod.parse_tunings(
            {"readout": {"tunings_hz": [100.0, 1000.0]}})
        assert [t.balance_frequency for t in tunings] == pytest.approx(
            [2 * math.pi * 100.0, 2 * math.pi * 1000.0])

    def test_single_and_sweep_conflict(self):
        with pytest.raises(ConfigError, match="not both"):
            cfgmod.parse_tunings({"readout": {
                "balance_frequency_hz": 1.0, "tunings_hz": [1.0]}})

    def test_impulse_kevc(self):
        dp = cfgmod.parse_impulse({"readout": {
            "balance_frequency_hz": 1.0, "impulse_kevc": 7.0}})
        assert dp == pytest.approx(7.0 * KEV_C, rel=1e-15)

    def test_grid_defaults_and_conversion(self):
        grid = cfgmod.parse_grid({"grid": {"hi_kevc": 60.0}})
        assert grid.lo == 0.0
        assert grid.hi == pytest.approx(60.0 * KEV_C, rel=1e-15)
        assert grid.count == 200 and grid.spacing == "linear"

    def test_grid_requires_hi(self):
        with pytest.raises(ConfigError, match="hi"):
            cfgmod.parse_grid({"grid": {"lo_kevc": 0.0}})

    def test_build_noise(self):
        noise = cfgmod.build_noise({
            "mode": {"mass_kg": 1e-18, "frequency_hz": 1000.0,
                     "quality_factor": 1e4},
            "readout": {"balance_frequency_hz": 1000.0,
                        "technical_force_psd_si": 1e-40},
        })
        assert noise.technical == 1e-40
        assert noise.readout.balance_frequency == pytest.approx(2 * math.pi * 1000.0)
