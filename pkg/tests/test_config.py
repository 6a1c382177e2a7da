"""Scenario config validation, canonical hashing, and parameter paths."""

import json
import math

import pytest

from mwsqueeze.config import (
    FringePlan,
    InterferometerScenario,
    MomentumScenario,
    canonical_config,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_hash,
    set_by_path,
)
from mwsqueeze.errors import ConfigError

HALF_PI = math.pi / 2.0


def base_config(**overrides):
    cfg = {
        "kind": "interferometer",
        "name": "demo",
        "n_atoms": 100,
        "n_trials": 10,
        "master_seed": 7,
        "sequence": [
            {"kind": "rotation", "angle": -HALF_PI, "axis": "y"},
            {"kind": "twist", "mu": 0.01},
            {"kind": "evolve", "t_evol": 1e-4, "signal_phase": 0.02},
            {"kind": "rotation", "angle": HALF_PI, "axis": "x"},
            {"kind": "readout"},
        ],
        "fringe": {"mode": "scan_last_rotation"},
    }
    cfg.update(overrides)
    return cfg


def momentum_config(**overrides):
    cfg = {
        "kind": "velocimetry",
        "classes": [{"momentum": 0.0, "weight": 0.3},
                    {"momentum": 4.0, "weight": 0.7, "spin": "up"}],
        "probe": {"rabi": 8796.5, "delta_min": -1e5, "delta_max": 5e5},
    }
    cfg.update(overrides)
    return cfg


class TestValidation:
    def test_minimal_scenario_fills_defaults(self):
        scn = scenario_from_dict(base_config())
        assert isinstance(scn, InterferometerScenario)
        assert scn.schema_version == 1
        assert scn.noise.quantum_efficiency == 0.1
        assert scn.noise.readout_floor_db == 15.0
        assert scn.physics.kappa == pytest.approx(2 * math.pi * 56e3)
        assert scn.fringe.n_points == 16
        assert scn.sequence[1].mu == 0.01

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="extra_key"):
            scenario_from_dict(base_config(extra_key=1))

    def test_unknown_nested_keys(self):
        with pytest.raises(ConfigError):
            scenario_from_dict(base_config(noise={"qe": 0.1}))
        cfg = base_config()
        cfg["sequence"][1]["typo"] = True
        with pytest.raises(ConfigError):
            scenario_from_dict(cfg)

    def test_unsupported_schema_version(self):
        with pytest.raises(ConfigError, match="schema_version"):
            scenario_from_dict(base_config(schema_version=2))

    def test_physics_validation_propagates(self):
        with pytest.raises(ConfigError, match="kappa"):
            scenario_from_dict(base_config(physics={"kappa": -1.0}))

    def test_empty_sequence_rejected(self):
        with pytest.raises(ConfigError, match="sequence"):
            scenario_from_dict(base_config(sequence=[]))

    def test_readout_must_be_terminal_and_unique(self):
        cfg = base_config()
        cfg["sequence"] = cfg["sequence"][:-1]
        with pytest.raises(ConfigError, match="readout"):
            scenario_from_dict(cfg)
        cfg = base_config()
        cfg["sequence"].insert(1, {"kind": "readout"})
        with pytest.raises(ConfigError, match="readout"):
            scenario_from_dict(cfg)

    def test_velocity_select_leading_only(self):
        cfg = base_config()
        cfg["sequence"].insert(2, {"kind": "velocity_select", "rabi": 8800.0})
        with pytest.raises(ConfigError, match="velocity_select"):
            scenario_from_dict(cfg)
        cfg = base_config()
        cfg["sequence"].insert(0, {"kind": "velocity_select", "rabi": 8800.0})
        scn = scenario_from_dict(cfg)
        assert scn.sequence[0].kind == "velocity_select"

    def test_scan_mode_needs_a_rotation(self):
        cfg = base_config()
        cfg["sequence"] = [{"kind": "twist", "mu": 0.01},
                           {"kind": "readout"}]
        with pytest.raises(ConfigError, match="rotation"):
            scenario_from_dict(cfg)
        cfg["fringe"] = {"mode": "insert"}
        assert scenario_from_dict(cfg).fringe.mode == "insert"

    def test_step_field_bounds(self):
        cfg = base_config()
        cfg["sequence"][1]["mu"] = -0.1
        with pytest.raises(ConfigError):
            scenario_from_dict(cfg)
        cfg = base_config()
        cfg["sequence"][2]["t_evol"] = -1e-3
        with pytest.raises(ConfigError):
            scenario_from_dict(cfg)
        cfg = base_config()
        cfg["sequence"].insert(1, {"kind": "qnd", "photons": 0.0})
        with pytest.raises(ConfigError):
            scenario_from_dict(cfg)
        cfg = base_config()
        cfg["sequence"][0]["angle"] = float("nan")
        with pytest.raises(ConfigError):
            scenario_from_dict(cfg)

    def test_readout_options(self):
        cfg = base_config()
        cfg["sequence"][-1] = {"kind": "readout", "basis": "population",
                               "sampling": "expectation", "photons": 500.0}
        scn = scenario_from_dict(cfg)
        assert scn.sequence[-1].basis == "population"
        cfg["sequence"][-1] = {"kind": "readout", "basis": "sideways"}
        with pytest.raises(ConfigError):
            scenario_from_dict(cfg)

    def test_momentum_scenarios(self):
        scn = scenario_from_dict(momentum_config())
        assert isinstance(scn, MomentumScenario)
        assert scn.kind == "velocimetry"
        ladder = scenario_from_dict({
            "kind": "bragg_ladder",
            "classes": [{"momentum": 0.0, "weight": 1.0}],
            "pulses": [{"rabi": 1e4, "duration": math.pi / 1e4}],
        })
        assert len(ladder.pulses) == 1

    def test_momentum_source_exclusivity(self):
        with pytest.raises(ConfigError, match="thermal_fwhm or classes"):
            scenario_from_dict(momentum_config(thermal_fwhm=5.0))
        cfg = momentum_config()
        del cfg["classes"]
        with pytest.raises(ConfigError, match="thermal_fwhm or classes"):
            scenario_from_dict(cfg)

    def test_momentum_required_blocks(self):
        cfg = momentum_config()
        del cfg["probe"]
        with pytest.raises(ConfigError, match="probe"):
            scenario_from_dict(cfg)
        with pytest.raises(ConfigError, match="pulse"):
            scenario_from_dict({"kind": "bragg_ladder",
                                "thermal_fwhm": 1.0})

    def test_probe_ordering_and_grid_step(self):
        cfg = momentum_config()
        cfg["probe"]["delta_max"] = cfg["probe"]["delta_min"]
        with pytest.raises(ConfigError):
            scenario_from_dict(cfg)
        with pytest.raises(ConfigError):
            scenario_from_dict(momentum_config(grid_step=0.02))

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            scenario_from_dict(base_config(kind="mystery"))


class TestHashing:
    def test_stable_under_key_reordering(self):
        scn = scenario_from_dict(base_config())
        reordered = json.loads(json.dumps(
            dict(reversed(list(base_config().items())))))
        assert scenario_hash(scenario_from_dict(reordered)) == \
            scenario_hash(scn)

    def test_sensitive_to_any_value(self):
        base = scenario_hash(scenario_from_dict(base_config()))
        assert scenario_hash(scenario_from_dict(
            base_config(n_atoms=101))) != base
        assert scenario_hash(scenario_from_dict(
            base_config(master_seed=8))) != base
        cfg = base_config()
        cfg["sequence"][1]["mu"] = 0.011
        assert scenario_hash(scenario_from_dict(cfg)) != base

    def test_equal_content_equal_hash(self):
        a = scenario_from_dict(base_config())
        b = scenario_from_dict(base_config())
        assert scenario_hash(a) == scenario_hash(b)

    def test_hash_is_hex_sha256(self):
        h = scenario_hash(scenario_from_dict(base_config()))
        assert len(h) == 64
        int(h, 16)


class TestPersistence:
    def test_save_load_round_trip(self, tmp_path):
        scn = scenario_from_dict(base_config())
        path = tmp_path / "scenario.json"
        save_scenario(scn, path)
        loaded = load_scenario(path)
        assert loaded == scn
        assert scenario_hash(loaded) == scenario_hash(scn)
        raw = json.loads(path.read_text())
        assert raw["schema_version"] == 1

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_scenario(tmp_path / "nope.json")

    def test_load_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="JSON"):
            load_scenario(path)

    def test_load_non_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2, 3]")
        with pytest.raises(ConfigError, match="object"):
            load_scenario(path)

    def test_canonical_config_contains_all_defaults(self):
        data = canonical_config(scenario_from_dict(base_config()))
        assert data["noise"]["pulse_loss_prob"] == 0.002
        assert data["physics"]["eta_c"] == 0.9
        assert data["fringe"]["repeats_per_point"] == 4


class TestSetByPath:
    def test_scalar_fields(self):
        scn = scenario_from_dict(base_config())
        assert set_by_path(scn, "n_atoms", 660).n_atoms == 660
        assert set_by_path(scn, "noise.quantum_efficiency",
                           0.25).noise.quantum_efficiency == 0.25

    def test_list_index(self):
        scn = scenario_from_dict(base_config())
        out = set_by_path(scn, "sequence.2.t_evol", 5e-4)
        assert out.sequence[2].t_evol == 5e-4
        assert scn.sequence[2].t_evol == 1e-4

    def test_wildcard_updates_all_carriers(self):
        cfg = base_config()
        cfg["sequence"].insert(3, {"kind": "evolve", "t_evol": 2e-4})
        scn = scenario_from_dict(cfg)
        out = set_by_path(scn, "sequence.*.t_evol", 9e-4)
        evolves = [s for s in out.sequence if s.kind == "evolve"]
        assert [s.t_evol for s in evolves] == [9e-4, 9e-4]

    def test_integer_coercion(self):
        scn = scenario_from_dict(base_config())
        assert set_by_path(scn, "n_atoms", 660.0).n_atoms == 660
        with pytest.raises(ConfigError):
            set_by_path(scn, "n_atoms", 660.5)

    def test_rejects_bad_paths(self):
        scn = scenario_from_dict(base_config())
        for path in ("sequence.9.mu", "noise.missing", "sequence.*.nope",
                     "name", "sequence.*", "", "noise..q"):
            with pytest.raises(ConfigError):
                set_by_path(scn, path, 1.0)

    def test_rejected_value_is_config_error(self):
        scn = scenario_from_dict(base_config())
        with pytest.raises(ConfigError):
            set_by_path(scn, "noise.quantum_efficiency", -0.5)

    def test_metadata_values_addressable(self):
        scn = scenario_from_dict(base_config(metadata={"probe_detune": 1.0}))
        out = set_by_path(scn, "metadata.probe_detune", 2.5)
        assert out.metadata["probe_detune"] == 2.5


class TestFringePlan:
    def test_defaults(self):
        plan = FringePlan()
        assert plan.mode == "insert"
        assert plan.n_points >= 5

    def test_bounds(self):
        with pytest.raises(ValueError):
            FringePlan(n_points=3)
        with pytest.raises(ValueError):
            FringePlan(repeats_per_point=0)
