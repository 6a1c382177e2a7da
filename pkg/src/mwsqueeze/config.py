"""Scenario configuration: validated models, canonical hashing, paths.

Scenarios are flat JSON documents with a ``schema_version`` field;
unknown keys are hard errors. The scenario id is the SHA-256 of the
canonical dump (sorted keys, compact separators), so it is stable
under key reordering and sensitive to every value change.

Two scenario kinds exist: ``interferometer`` runs collective-spin
Monte Carlo trials and emits trial records; ``velocimetry`` and
``bragg_ladder`` run the classical momentum model and emit CSV tables.
The physics, geometry, and noise blocks validate directly into the
frozen dataclasses the simulation layers consume.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Annotated, Any, Literal, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    TypeAdapter,
    ValidationError,
    field_validator,
    model_validator,
)

from .cavity import EnsembleGeometry, PhysicsParams
from .dynamics import NoiseConfig
from .errors import ConfigError

__all__ = [
    "RotationStep",
    "TwistStep",
    "QndStep",
    "EvolveStep",
    "VelocitySelectStep",
    "ReadoutStep",
    "FringePlan",
    "InterferometerScenario",
    "MomentumClassConfig",
    "PulseConfig",
    "ProbeConfig",
    "MomentumScenario",
    "Scenario",
    "scenario_from_dict",
    "load_scenario",
    "save_scenario",
    "canonical_config",
    "scenario_hash",
    "set_by_path",
]

SCHEMA_VERSION = 1


class _Step(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class RotationStep(_Step):
    """Collective rotation by ``angle`` about the given axis.

    ``axis`` is x, y, z, or ``equatorial`` with an explicit azimuth.
    A negative-angle y rotation maps the pole-built state onto +x.
    """

    kind: Literal["rotation"] = "rotation"
    angle: float
    axis: Literal["x", "y", "z", "equatorial"] = "x"
    azimuth: float = 0.0

    @field_validator("angle", "azimuth")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value


class TwistStep(_Step):
    """One-axis twisting by integrated shearing strength ``mu``."""

    kind: Literal["twist"] = "twist"
    mu: float = Field(ge=0.0)
    chi_oat: float = Field(default=2.0 * math.pi * 10.0, gt=0.0)
    echo: bool = True


class QndStep(_Step):
    """Pre-measurement sweep pair with ``photons`` incident photons."""

    kind: Literal["qnd"] = "qnd"
    photons: float = Field(gt=0.0)


class EvolveStep(_Step):
    """Free evolution for ``t_evol`` seconds accruing ``signal_phase``."""

    kind: Literal["evolve"] = "evolve"
    t_evol: float = Field(ge=0.0)
    signal_phase: float = 0.0

    @field_validator("signal_phase")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value


class VelocitySelectStep(_Step):
    """Axial velocity selection gating the atom number before the CSS."""

    kind: Literal["velocity_select"] = "velocity_select"
    rabi: float = Field(gt=0.0)
    detuning: float = 0.0
    passes: int = Field(default=1, ge=1)


class ReadoutStep(_Step):
    """Terminal readout: final sweep pair.

    ``basis`` chooses what the signal trials measure: ``phase`` reads
    the interferometer phase through the preceding rotation sequence,
    ``population`` skips the final fringe rotation and reads the bare
    population difference (fringe calibrations still insert it).
    ``sampling`` selects projective sampling (default) or the exact
    expectation value of J_z (noise-free diagnostics).
    """

    kind: Literal["readout"] = "readout"
    basis: Literal["phase", "population"] = "phase"
    sampling: Literal["sampled", "expectation"] = "sampled"
    photons: float = Field(default=0.0, ge=0.0)


SequenceStep = Annotated[
    Union[RotationStep, TwistStep, QndStep, EvolveStep, VelocitySelectStep,
          ReadoutStep],
    Field(discriminator="kind"),
]


class FringePlan(BaseModel):
    """How fringe-calibration trials vary the readout azimuth.

    ``scan_last_rotation`` sweeps the azimuth of the last rotation step
    before readout; ``insert`` adds a pi/2 rotation with swept azimuth
    right before readout (for sequences that end without one).
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    mode: Literal["scan_last_rotation", "insert"] = "insert"
    n_points: int = Field(default=16, ge=5)
    repeats_per_point: int = Field(default=4, ge=1)


class InterferometerScenario(BaseModel):
    """Complete specification of one Monte Carlo interferometer run."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    schema_version: int = SCHEMA_VERSION
    kind: Literal["interferometer"] = "interferometer"
    name: str = ""
    n_atoms: int = Field(ge=2)
    n_trials: int = Field(ge=1)
    master_seed: int = Field(default=0, ge=0)
    physics: PhysicsParams = PhysicsParams()
    geometry: EnsembleGeometry = EnsembleGeometry()
    noise: NoiseConfig = NoiseConfig()
    sequence: list[SequenceStep]
    fringe: FringePlan = FringePlan()
    metadata: dict[str, Union[str, float, int, bool]] = Field(
        default_factory=dict)

    @field_validator("schema_version")
    @classmethod
    def _known_version(cls, value: int) -> int:
        if value != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {value}, "
                             f"expected {SCHEMA_VERSION}")
        return value

    @model_validator(mode="after")
    def _check_sequence(self) -> "InterferometerScenario":
        if not self.sequence:
            raise ValueError("sequence must not be empty")
        if self.sequence[-1].kind != "readout":
            raise ValueError("sequence must end with a readout step")
        kinds = [step.kind for step in self.sequence]
        if kinds.count("readout") != 1:
            raise ValueError("sequence must contain exactly one readout, "
                             "at the end")
        for i, kind in enumerate(kinds):
            if kind == "velocity_select" and i != 0:
                raise ValueError("velocity_select is only allowed as the "
                                 "leading step")
        if self.fringe.mode == "scan_last_rotation" and \
                "rotation" not in kinds:
            raise ValueError("fringe mode scan_last_rotation needs a "
                             "rotation step in the sequence")
        return self


class MomentumClassConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    momentum: float
    weight: float = Field(gt=0.0)
    spin: Literal["up", "down"] = "down"


class PulseConfig(BaseModel):
    """One momentum-transfer pulse (field names match RamanPulse)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    rabi: float = Field(gt=0.0)
    duration: float = Field(ge=0.0)
    two_photon_detuning: float = 0.0
    pulse_kind: Literal["raman", "bragg"] = "bragg"
    ideal: bool = False
    stark_offset: float = 0.0


class ProbeConfig(BaseModel):
    """Velocimetry probe: lineshape scanned over a detuning grid."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    rabi: float = Field(gt=0.0)
    delta_min: float
    delta_max: float
    n_points: int = Field(default=121, ge=3)

    @model_validator(mode="after")
    def _ordered(self) -> "ProbeConfig":
        if not self.delta_min < self.delta_max:
            raise ValueError("delta_min must be below delta_max")
        return self


class MomentumScenario(BaseModel):
    """Classical momentum-model run: a source, pulses, optional probe."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    schema_version: int = SCHEMA_VERSION
    kind: Literal["velocimetry", "bragg_ladder"]
    name: str = ""
    master_seed: int = Field(default=0, ge=0)
    physics: PhysicsParams = PhysicsParams()
    thermal_fwhm: float | None = Field(default=None, gt=0.0)
    classes: list[MomentumClassConfig] | None = None
    grid_step: float = Field(default=0.01, gt=0.0, le=0.01)
    pulse_loss_prob: float = Field(default=0.0, ge=0.0, lt=1.0)
    pulses: list[PulseConfig] = Field(default_factory=list)
    probe: ProbeConfig | None = None
    metadata: dict[str, Union[str, float, int, bool]] = Field(
        default_factory=dict)

    @field_validator("schema_version")
    @classmethod
    def _known_version(cls, value: int) -> int:
        if value != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {value}, "
                             f"expected {SCHEMA_VERSION}")
        return value

    @model_validator(mode="after")
    def _check_payload(self) -> "MomentumScenario":
        if (self.thermal_fwhm is None) == (self.classes is None):
            raise ValueError("exactly one of thermal_fwhm or classes must "
                             "be given")
        if self.classes is not None and not self.classes:
            raise ValueError("classes must not be empty")
        if self.kind == "velocimetry" and self.probe is None:
            raise ValueError("velocimetry needs a probe block")
        if self.kind == "bragg_ladder" and not self.pulses:
            raise ValueError("bragg_ladder needs at least one pulse")
        return self


Scenario = Union[InterferometerScenario, MomentumScenario]

_SCENARIO_ADAPTER: TypeAdapter = TypeAdapter(
    Annotated[Scenario, Field(discriminator="kind")])


def scenario_from_dict(data: dict) -> Scenario:
    """Validate a plain dict into a scenario model.

    Raises
    ------
    ConfigError
        Unknown keys, bad types, violated invariants, or an
        unsupported schema version.
    """
    try:
        return _SCENARIO_ADAPTER.validate_python(data)
    except ValidationError as err:
        details = "; ".join(
            f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}"
            for e in err.errors()[:5])
        raise ConfigError(f"invalid scenario config: {details}") from err


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario JSON document."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise ConfigError("config document must be a JSON object")
    return scenario_from_dict(data)


def canonical_config(scenario: Scenario) -> dict:
    """JSON-ready dict with every field present, for hashing and storage."""
    return scenario.model_dump(mode="json")


def scenario_hash(scenario: Scenario) -> str:
    """SHA-256 of the canonical dump; stable under key reordering."""
    payload = json.dumps(canonical_config(scenario), sort_keys=True,
                         separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(canonical_config(scenario), handle, sort_keys=True,
                  indent=2)
        handle.write("\n")


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def set_by_path(scenario: Scenario, path: str, value: float) -> Scenario:
    """Return a copy of the scenario with one numeric field replaced.

    The path is dot-separated: dict keys, integer list indices, or
    ``*`` to fan out over a list (``sequence.*.t_evol`` updates every
    step that carries the field; at least one must). The addressed
    field must already hold a number.

    Raises
    ------
    ConfigError
        Unresolvable path, non-numeric target, or a value the model
        rejects.
    """
    tokens = path.split(".")
    if not path or any(not t for t in tokens):
        raise ConfigError(f"malformed parameter path {path!r}")
    data = canonical_config(scenario)

    nodes: list[Any] = [data]
    fan_out = False
    for token in tokens[:-1]:
        next_nodes: list[Any] = []
        for node in nodes:
            if token == "*":
                if not isinstance(node, list):
                    raise ConfigError(
                        f"path {path!r}: '*' must index a list")
                next_nodes.extend(node)
                fan_out = True
            elif isinstance(node, list):
                try:
                    index = int(token)
                    next_nodes.append(node[index])
                except (ValueError, IndexError) as err:
                    raise ConfigError(
                        f"path {path!r}: bad list index {token!r}") from err
            elif isinstance(node, dict):
                if token not in node:
                    raise ConfigError(
                        f"path {path!r}: unknown field {token!r}")
                next_nodes.append(node[token])
            else:
                raise ConfigError(
                    f"path {path!r}: cannot descend into {token!r}")
        nodes = next_nodes

    leaf = tokens[-1]
    if leaf == "*":
        raise ConfigError("parameter path cannot end with '*'")
    hits = 0
    for node in nodes:
        if not isinstance(node, dict):
            raise ConfigError(f"path {path!r}: target is not an object")
        if leaf not in node:
            if fan_out:
                continue
            raise ConfigError(f"path {path!r}: unknown field {leaf!r}")
        if not _is_number(node[leaf]):
            if fan_out:
                continue
            raise ConfigError(
                f"path {path!r} does not address a numeric field")
        node[leaf] = value
        hits += 1
    if hits == 0:
        raise ConfigError(
            f"path {path!r} does not address a numeric field")
    return scenario_from_dict(data)
