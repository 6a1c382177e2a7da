"""Trial records and run artifacts: JSON-lines persistence and manifests.

One Monte Carlo trial produces one ``TrialRecord`` holding the pair(s)
of cavity frequency-shift outcomes plus bookkeeping. Records are stored
one JSON object per line with sorted keys and compact separators, so a
record file is a byte-level pure function of (config, master seed, code
version) regardless of how many workers produced it. A ``RunManifest``
written next to the records lists every emitted file with its SHA-256
checksum; it carries wall-clock timestamps and is therefore the one
artifact excluded from byte determinism.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .dynamics import ContrastLedger

__all__ = [
    "TrialRecord",
    "RunManifest",
    "dumps_record",
    "loads_record",
    "write_records",
    "read_records",
    "write_manifest",
    "read_manifest",
    "file_sha256",
]

ROLES = ("signal", "fringe_with", "fringe_without")

_OUTCOME_FIELDS = ("omega_1p", "omega_2p", "omega_1f", "omega_2f")


@dataclass(frozen=True)
class TrialRecord:
    """Outcomes and bookkeeping for a single interferometer trial.

    The four frequency outcomes (rad/s) are the two cavity shifts of the
    pre-measurement sweep pair and the two of the final readout pair;
    each may be absent when the sequence skips that phase. ``role``
    separates trials used as the phase signal from the two fringe
    calibrations (with and without the squeezing step).

    Attributes
    ----------
    trial_id : int
        Index of the trial within its scenario, 0-based.
    seed : int
        Master seed of the run the trial belongs to.
    scenario_id : str
        Hash of the generating configuration.
    role : str
        One of ``signal``, ``fringe_with``, ``fringe_without``.
    omega_1p, omega_2p, omega_1f, omega_2f : float or None
        Cavity frequency shifts, rad/s, None when not measured.
    readout_azimuth : float
        Azimuth (rad) of the final readout rotation axis; the fringe
        abscissa.
    ledger : ContrastLedger
        Decoherence bookkeeping snapshot at readout time.
    n_atoms_actual : int
        Atom number realized in the trial after number fluctuations
        and velocity-selection gating.
    """

    trial_id: int
    seed: int
    scenario_id: str
    role: str = "signal"
    omega_1p: float | None = None
    omega_2p: float | None = None
    omega_1f: float | None = None
    omega_2f: float | None = None
    readout_azimuth: float = 0.0
    ledger: ContrastLedger = field(default_factory=ContrastLedger)
    n_atoms_actual: int = 0

    def __post_init__(self):
        if self.trial_id < 0:
            raise ValueError("trial_id must be >= 0")
        if self.role not in ROLES:
            raise ValueError(f"unknown trial role {self.role!r}")
        for name in _OUTCOME_FIELDS:
            value = getattr(self, name)
            if value is not None and not math.isfinite(value):
                raise ValueError(f"{name} must be finite when present")
        if not math.isfinite(self.readout_azimuth):
            raise ValueError("readout_azimuth must be finite")
        if self.n_atoms_actual < 0:
            raise ValueError("n_atoms_actual must be >= 0")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrialRecord":
        payload = dict(data)
        ledger = payload.get("ledger")
        if isinstance(ledger, dict):
            payload["ledger"] = ContrastLedger(**ledger)
        return cls(**payload)


def dumps_record(record: TrialRecord) -> str:
    """Canonical single-line JSON for one record (no trailing newline)."""
    return json.dumps(record.to_dict(), sort_keys=True,
                      separators=(",", ":"))


def loads_record(line: str) -> TrialRecord:
    return TrialRecord.from_dict(json.loads(line))


def write_records(path: str | Path, records: Iterable[TrialRecord]) -> None:
    """Write records as JSON lines, one trial per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(dumps_record(record))
            handle.write("\n")


def read_records(path: str | Path) -> list[TrialRecord]:
    """Read a JSON-lines record file; blank lines are skipped."""
    out = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                out.append(loads_record(line))
    return out


@dataclass
class RunManifest:
    """Provenance for one run: config snapshot, outputs, checksums.

    ``outputs`` maps file names (relative to the manifest's directory)
    to SHA-256 hex digests. ``complete`` is False while trials are
    still being written, so an aborted run leaves a valid truncated
    record file plus a manifest flagging the truncation.
    """

    scenario_id: str
    config: dict
    code_version: str
    master_seed: int
    n_trials: int
    started_at: str
    finished_at: str | None = None
    complete: bool = False
    outputs: dict = field(default_factory=dict)
    scan_summary: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        return cls(**data)


def write_manifest(manifest: RunManifest, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(manifest.to_dict(), handle, sort_keys=True, indent=2)
        handle.write("\n")


def read_manifest(path: str | Path) -> RunManifest:
    with open(path, "r", encoding="utf-8") as handle:
        return RunManifest.from_dict(json.load(handle))


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()
