"""Scenario execution: trial plans, Monte Carlo runs, scans, persistence.

One interferometer run executes three ensembles under a single running
trial index: the signal trials, a fringe calibration with the squeezing
step active, and one with it disabled (twist and measurement steps are
skipped for the reference ensemble). Fringe trials sweep the azimuth of
the final readout rotation, either by scanning the last rotation step in
the sequence or by inserting a pi/2 pulse before readout, depending on
the scenario's fringe plan.

Every random draw comes from a counter-based stream addressed by
(master_seed, trial_id, step_index), so trials are independent of
execution order and the record file is a byte-level function of the
configuration. Trials run in a thread pool; the writer emits records in
trial-id order, which keeps output files identical across worker counts.

Parameter scans rerun the scenario with one numeric field swept. Each
point keeps the same master seed, so all points share their projection
noise realizations; differences between points are then dominated by the
swept parameter rather than by sampling noise (common random numbers).

Momentum scenarios (velocimetry and ladder sequences) run the classical
momentum model instead and emit CSV tables; they are deterministic and
need no trial machinery.
"""

from __future__ import annotations

import csv
import datetime
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import AnalysisReport, analyze_records
from .cavity import DispersiveShifts, dispersive_shifts, effective_coupling
from .config import (
    InterferometerScenario,
    MomentumScenario,
    ReadoutStep,
    RotationStep,
    Scenario,
    canonical_config,
    scenario_from_dict,
    scenario_hash,
    set_by_path,
)
from .dynamics import (
    ContrastLedger,
    TwistSpec,
    apply_scattering,
    free_evolve,
    imprecision_from_photons,
    qnd_measure,
    twist,
)
from .errors import ConfigError
from .kinematics import (
    MomentumDistribution,
    RamanPulse,
    apply_momentum_pulse,
    discrete_classes,
    save_distribution_csv,
    save_spectrum_csv,
    thermal_distribution,
    velocity_select,
    velocity_spectrum,
)
from .records import (
    RunManifest,
    TrialRecord,
    dumps_record,
    file_sha256,
    read_manifest,
    read_records,
    write_manifest,
)
from .rng import stream
from .spins import SpinProjectionAxis, expect, new_css, rotate, sample_jz

__all__ = [
    "TrialRunResult",
    "MomentumRunResult",
    "ScanPoint",
    "scenario_shifts",
    "run",
    "scan",
    "save_scan_csv",
    "analyze_records_file",
]

RECORDS_NAME = "records.jsonl"
MANIFEST_NAME = "manifest.json"


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(
        timespec="seconds")


def scenario_shifts(scenario: InterferometerScenario) -> DispersiveShifts:
    """Transduction constants implied by a scenario's cavity parameters."""
    g = effective_coupling(scenario.physics, scenario.geometry)
    return dispersive_shifts(scenario.physics, g)


# ---------------------------------------------------------------------------
# trial plan

@dataclass(frozen=True)
class _TrialTask:
    trial_id: int
    role: str
    azimuth: float  # readout-rotation azimuth; fringe abscissa


def _trial_plan(scenario: InterferometerScenario) -> list[_TrialTask]:
    """Signal trials first, then the two fringe ensembles, one index space."""
    plan = [_TrialTask(i, "signal", 0.0) for i in range(scenario.n_trials)]
    next_id = scenario.n_trials
    n_points = scenario.fringe.n_points
    for role in ("fringe_with", "fringe_without"):
        for point in range(n_points):
            azimuth = 2.0 * math.pi * point / n_points
            for _ in range(scenario.fringe.repeats_per_point):
                plan.append(_TrialTask(next_id, role, azimuth))
                next_id += 1
    return plan


def _rotation_axis(step: RotationStep) -> SpinProjectionAxis:
    if step.axis == "x":
        return SpinProjectionAxis.x()
    if step.axis == "y":
        return SpinProjectionAxis.y()
    if step.axis == "z":
        return SpinProjectionAxis.z()
    return SpinProjectionAxis.equatorial(step.azimuth)


def _step_azimuth(step: RotationStep) -> float:
    if step.axis == "x":
        return 0.0
    if step.axis == "y":
        return 0.5 * math.pi
    if step.axis == "equatorial":
        return step.azimuth
    return 0.0


def _charge_pulses(ledger: ContrastLedger, n_atoms: int, n_pulses: int,
                   loss_prob: float, rng: np.random.Generator
                   ) -> ContrastLedger:
    """Binomial atom loss for coherent-control pulses."""
    if loss_prob <= 0.0 or n_pulses == 0:
        return ledger
    live = n_atoms - ledger.lost_atoms
    if live <= 0:
        return ledger
    p = 1.0 - (1.0 - loss_prob) ** n_pulses
    newly_lost = int(rng.binomial(live, p))
    if newly_lost == 0:
        return ledger
    return replace(ledger, lost_atoms=ledger.lost_atoms + newly_lost)


def _selection_survival(scenario: InterferometerScenario) -> float:
    """Kept fraction of the leading velocity-selection step, if any."""
    first = scenario.sequence[0]
    if first.kind != "velocity_select":
        return 1.0
    dist = thermal_distribution()
    _, survival = velocity_select(dist, first.rabi, first.detuning,
                                  first.passes, scenario.physics)
    return survival


def _draw_atom_number(scenario: InterferometerScenario, survival: float,
                      rng: np.random.Generator) -> int:
    n = scenario.n_atoms
    cv = scenario.noise.atom_number_cv
    if cv > 0.0:
        n = int(round(n * (1.0 + cv * rng.standard_normal())))
    if survival < 1.0 and n > 0:
        n = int(rng.binomial(n, survival))
    return max(n, 2)


# ---------------------------------------------------------------------------
# outcome synthesis

def _pre_pair(outcome: float, ledger: ContrastLedger, n_atoms: int,
              shifts: DispersiveShifts) -> tuple[float, float]:
    """Cavity shift pair of the measurement sweep windows.

    The windows straddle a pi pulse, so their difference transduces the
    measured J_z at gain 2 (chi0 - chi_down) while the common part
    carries the total live population. The measurement imprecision is
    already inside ``outcome``.
    """
    live = max(n_atoms - ledger.lost_atoms, 0)
    common = 0.5 * (shifts.chi0 + shifts.chi_down) * live
    half_diff = (shifts.chi0 - shifts.chi_down) * outcome
    return common + half_diff, common - half_diff


def _final_pair(state, ledger: ContrastLedger, n_atoms: int,
                scenario: InterferometerScenario, shifts: DispersiveShifts,
                readout: ReadoutStep, rotated_since_scatter: bool,
                rng: np.random.Generator) -> tuple[float, float]:
    """Cavity shift pair of the pumped final readout.

    Window 1 sees both hyperfine populations (chi2 N_up + chi_down
    N_down), window 2 only the lower one after repumping (chi2 N_down);
    the analysis-side epsilon correction undoes the chi_down pull
    exactly. Projective sampling draws J_z from the state, thins to the
    surviving atoms, coin-flips the subset dephased by scattering when a
    readout rotation followed the scattering (a randomized equatorial
    phase only matters once it is rotated into the measurement axis),
    and adds the scattering J_z diffusion plus the technical noise floor
    of the readout.
    """
    noise = scenario.noise
    live = max(n_atoms - ledger.lost_atoms, 0)
    if readout.sampling == "expectation":
        mean_jz, _ = expect(state, SpinProjectionAxis.z())
        factor = ledger.coherent_fraction if rotated_since_scatter else 1.0
        jz = factor * mean_jz * (live / n_atoms)
        n_up = 0.5 * live + jz
        n_down = 0.5 * live - jz
        return (shifts.chi2 * n_up + shifts.chi_down * n_down,
                shifts.chi2 * n_down)

    m = sample_jz(state, rng)
    k_up = int(round(m + state.j))  # dicke index = up-state headcount
    n_up = 0.0
    if live > 0:
        n_dephased = 0
        if rotated_since_scatter and ledger.coherent_fraction < 1.0:
            n_dephased = int(rng.binomial(live,
                                          1.0 - ledger.coherent_fraction))
        n_coherent = live - n_dephased
        if n_coherent > 0:
            n_up += float(rng.hypergeometric(k_up, n_atoms - k_up,
                                             n_coherent))
        if n_dephased > 0:
            n_up += float(rng.binomial(n_dephased, 0.5))
    n_down = live - n_up
    if ledger.added_jz_diffusion > 0.0:
        drift = math.sqrt(ledger.added_jz_diffusion) * rng.standard_normal()
        n_up += drift
        n_down -= drift

    # technical noise referenced to the nominal ensemble's projection noise
    floor_var = 0.25 * scenario.n_atoms * 10.0 ** (-noise.readout_floor_db
                                                   / 10.0)
    if readout.photons > 0.0:
        floor_var += imprecision_from_photons(readout.photons, noise) ** 2
    sigma_u = shifts.chi2 * math.sqrt(2.0 * floor_var)
    u1 = sigma_u * rng.standard_normal()
    u2 = sigma_u * rng.standard_normal()
    omega_1f = shifts.chi2 * n_up + shifts.chi_down * n_down + u1
    omega_2f = shifts.chi2 * n_down + u2
    return omega_1f, omega_2f


# ---------------------------------------------------------------------------
# single trial

def _run_trial(scenario: InterferometerScenario, shifts: DispersiveShifts,
               scenario_id: str, survival: float, task: _TrialTask
               ) -> TrialRecord:
    noise = scenario.noise
    seq = scenario.sequence
    master = scenario.master_seed
    setup_rng = stream(master, task.trial_id, 0)
    n_atoms = _draw_atom_number(scenario, survival, setup_rng)

    state = new_css(n_atoms, math.pi, 0.0)  # all atoms in the lower state
    ledger = ContrastLedger()
    omega_1p = omega_2p = None
    rotated_since_scatter = False
    readout_azimuth = 0.0

    rotation_positions = [i for i, s in enumerate(seq)
                          if s.kind == "rotation"]
    last_rotation = rotation_positions[-1] if rotation_positions else None
    scan_last = scenario.fringe.mode == "scan_last_rotation"
    is_fringe = task.role != "signal"
    readout = seq[-1]
    skip_last_rotation = (not is_fringe and readout.basis == "population"
                          and scan_last)

    for position, step in enumerate(seq):
        rng = stream(master, task.trial_id, 1 + position)
        if step.kind == "velocity_select":
            continue  # folded into the atom-number draw
        if step.kind == "rotation":
            if position == last_rotation:
                if skip_last_rotation:
                    continue
                if is_fringe and scan_last:
                    axis = SpinProjectionAxis.equatorial(task.azimuth)
                    readout_azimuth = task.azimuth
                else:
                    axis = _rotation_axis(step)
                    readout_azimuth = _step_azimuth(step)
            else:
                axis = _rotation_axis(step)
            state = rotate(state, step.angle, axis)
            if not axis.is_z:
                ledger = _charge_pulses(ledger, n_atoms, 1,
                                        noise.pulse_loss_prob, rng)
                rotated_since_scatter = True
        elif step.kind == "twist":
            if is_fringe and task.role == "fringe_without":
                continue
            if step.mu == 0.0:
                continue
            state = twist(state, TwistSpec(step.mu, step.chi_oat, step.echo))
            if step.echo:
                ledger = _charge_pulses(ledger, n_atoms, 1,
                                        noise.pulse_loss_prob, rng)
        elif step.kind == "qnd":
            if task.role == "fringe_without":
                continue
            sigma = imprecision_from_photons(step.photons, noise)
            outcome, state = qnd_measure(state, sigma, rng)
            state, ledger = apply_scattering(state, ledger, step.photons,
                                             noise, rng)
            # the sweep windows straddle an echo pair of pi pulses
            ledger = _charge_pulses(ledger, n_atoms, 2,
                                    noise.pulse_loss_prob, rng)
            rotated_since_scatter = False
            omega_1p, omega_2p = _pre_pair(outcome, ledger, n_atoms, shifts)
        elif step.kind == "evolve":
            state = free_evolve(state, step.t_evol, step.signal_phase,
                                noise, rng)
        elif step.kind == "readout":
            if is_fringe and scenario.fringe.mode == "insert":
                insert_rng = stream(master, task.trial_id, 1 + len(seq))
                state = rotate(state, 0.5 * math.pi,
                               SpinProjectionAxis.equatorial(task.azimuth))
                ledger = _charge_pulses(ledger, n_atoms, 1,
                                        noise.pulse_loss_prob, insert_rng)
                rotated_since_scatter = True
                readout_azimuth = task.azimuth
            omega_1f, omega_2f = _final_pair(
                state, ledger, n_atoms, scenario, shifts, step,
                rotated_since_scatter, rng)

    return TrialRecord(
        trial_id=task.trial_id,
        seed=master,
        scenario_id=scenario_id,
        role=task.role,
        omega_1p=omega_1p,
        omega_2p=omega_2p,
        omega_1f=omega_1f,
        omega_2f=omega_2f,
        readout_azimuth=readout_azimuth,
        ledger=ledger,
        n_atoms_actual=n_atoms,
    )


# ---------------------------------------------------------------------------
# runs

@dataclass
class TrialRunResult:
    """Records plus provenance for one interferometer run."""

    scenario_id: str
    records: list[TrialRecord]
    manifest: RunManifest
    records_path: Path | None = None
    manifest_path: Path | None = None


@dataclass
class MomentumRunResult:
    """Momentum-model outputs: final distribution and optional spectrum."""

    scenario_id: str
    distribution: MomentumDistribution
    manifest: RunManifest
    delta_grid: np.ndarray | None = None
    spectrum: np.ndarray | None = None
    output_paths: dict | None = None


def run(scenario: Scenario, out_dir: str | Path | None = None,
        workers: int = 1) -> TrialRunResult | MomentumRunResult:
    """Execute a scenario; persist records and manifest when given a dir.

    Interferometer scenarios produce a JSON-lines record file written in
    trial-id order (bitwise reproducible for a fixed configuration and
    seed, independent of ``workers``) plus a manifest carrying the config
    snapshot and output checksums. Momentum scenarios emit CSV tables.

    A run aborted mid-way leaves a valid truncated record file and a
    manifest with ``complete`` still false.
    """
    if isinstance(scenario, InterferometerScenario):
        return _run_interferometer(scenario, out_dir, workers)
    if isinstance(scenario, MomentumScenario):
        return _run_momentum(scenario, out_dir)
    raise ConfigError(f"cannot run scenario of type {type(scenario).__name__}")


def _run_interferometer(scenario: InterferometerScenario,
                        out_dir: str | Path | None,
                        workers: int) -> TrialRunResult:
    scenario_id = scenario_hash(scenario)
    shifts = scenario_shifts(scenario)
    survival = _selection_survival(scenario)
    plan = _trial_plan(scenario)
    manifest = RunManifest(
        scenario_id=scenario_id,
        config=canonical_config(scenario),
        code_version=__version__,
        master_seed=scenario.master_seed,
        n_trials=len(plan),
        started_at=_utc_now(),
    )

    records_path = manifest_path = None
    handle = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        records_path = out_dir / RECORDS_NAME
        manifest_path = out_dir / MANIFEST_NAME
        write_manifest(manifest, manifest_path)  # early: flags truncation
        handle = open(records_path, "w", encoding="utf-8", newline="\n")

    def execute(task: _TrialTask) -> TrialRecord:
        return _run_trial(scenario, shifts, scenario_id, survival, task)

    records: list[TrialRecord] = []
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        produced = map(execute, plan) if pool is None else \
            pool.map(execute, plan)
        for record in produced:  # map preserves submission order
            records.append(record)
            if handle is not None:
                handle.write(dumps_record(record))
                handle.write("\n")
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
        if handle is not None:
            handle.close()

    manifest.finished_at = _utc_now()
    manifest.complete = True
    if records_path is not None:
        manifest.outputs = {RECORDS_NAME: file_sha256(records_path)}
        write_manifest(manifest, manifest_path)
    return TrialRunResult(scenario_id=scenario_id, records=records,
                          manifest=manifest, records_path=records_path,
                          manifest_path=manifest_path)


def _momentum_source(scenario: MomentumScenario) -> MomentumDistribution:
    if scenario.thermal_fwhm is not None:
        return thermal_distribution(fwhm=scenario.thermal_fwhm,
                                    step=scenario.grid_step)
    classes = [(c.momentum, c.weight, c.spin) for c in scenario.classes]
    return discrete_classes(classes, step=scenario.grid_step)


def _run_momentum(scenario: MomentumScenario,
                  out_dir: str | Path | None) -> MomentumRunResult:
    scenario_id = scenario_hash(scenario)
    manifest = RunManifest(
        scenario_id=scenario_id,
        config=canonical_config(scenario),
        code_version=__version__,
        master_seed=scenario.master_seed,
        n_trials=0,
        started_at=_utc_now(),
    )
    dist = _momentum_source(scenario)
    ladder_rows = []
    for index, cfg in enumerate(scenario.pulses):
        pulse = RamanPulse(rabi=cfg.rabi, duration=cfg.duration,
                           two_photon_detuning=cfg.two_photon_detuning,
                           kind=cfg.pulse_kind, ideal=cfg.ideal,
                           stark_offset=cfg.stark_offset)
        dist = apply_momentum_pulse(dist, pulse, scenario.physics,
                                    scenario.pulse_loss_prob)
        combined = dist.weight_up + dist.weight_down
        keep = combined > 1e-9
        for p, w in zip(dist.grid[keep], combined[keep]):
            ladder_rows.append((index, float(p), float(w)))

    delta_grid = spectrum = None
    if scenario.probe is not None:
        probe = scenario.probe
        delta_grid = np.linspace(probe.delta_min, probe.delta_max,
                                 probe.n_points)
        spectrum = velocity_spectrum(dist, probe.rabi, delta_grid,
                                     scenario.physics)

    output_paths = {}
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        dist_path = out_dir / "distribution.csv"
        save_distribution_csv(dist, dist_path)
        output_paths["distribution.csv"] = dist_path
        if ladder_rows:
            ladder_path = out_dir / "ladder.csv"
            with open(ladder_path, "w", encoding="utf-8",
                      newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["pulse_index", "momentum_hbark", "weight"])
                for row in ladder_rows:
                    writer.writerow([row[0], f"{row[1]:.6f}",
                                     f"{row[2]:.12e}"])
            output_paths["ladder.csv"] = ladder_path
        if spectrum is not None:
            spec_path = out_dir / "spectrum.csv"
            save_spectrum_csv(delta_grid, spectrum, spec_path)
            output_paths["spectrum.csv"] = spec_path
        manifest.finished_at = _utc_now()
        manifest.complete = True
        manifest.outputs = {name: file_sha256(path)
                            for name, path in output_paths.items()}
        write_manifest(manifest, out_dir / MANIFEST_NAME)
    else:
        manifest.finished_at = _utc_now()
        manifest.complete = True
    return MomentumRunResult(scenario_id=scenario_id, distribution=dist,
                             manifest=manifest, delta_grid=delta_grid,
                             spectrum=spectrum,
                             output_paths=output_paths or None)


# ---------------------------------------------------------------------------
# scans

@dataclass
class ScanPoint:
    """One scan point: swept value, its scenario hash, and the analysis."""

    value: float
    scenario_id: str
    report: AnalysisReport
    records: list[TrialRecord] | None = None


def scan(scenario: InterferometerScenario, param_path: str, values,
         out_dir: str | Path | None = None, workers: int = 1,
         keep_records: bool = False, n_resamples: int = 2000
         ) -> list[ScanPoint]:
    """Sweep one numeric config field, analyzing every point.

    Each point reuses the base master seed so the projection-noise
    realizations are shared across the sweep. With ``out_dir`` the
    per-point records land in numbered subdirectories and a summary
    table plus manifest cover the whole scan.
    """
    if not isinstance(scenario, InterferometerScenario):
        raise ConfigError("parameter scans need an interferometer scenario")
    values = [float(v) for v in values]
    if not values:
        raise ConfigError("scan needs at least one value")
    out_dir = Path(out_dir) if out_dir is not None else None
    points: list[ScanPoint] = []
    for index, value in enumerate(values):
        point_scenario = set_by_path(scenario, param_path, value)
        point_dir = None
        if out_dir is not None:
            point_dir = out_dir / f"point_{index:03d}"
        result = _run_interferometer(point_scenario, point_dir, workers)
        report = analyze_records(result.records,
                                 shifts=scenario_shifts(point_scenario),
                                 n_atoms=point_scenario.n_atoms,
                                 n_resamples=n_resamples)
        points.append(ScanPoint(
            value=value, scenario_id=result.scenario_id, report=report,
            records=result.records if keep_records else None))

    if out_dir is not None:
        save_scan_csv(param_path, points, out_dir / "scan.csv")
        manifest = RunManifest(
            scenario_id=scenario_hash(scenario),
            config=canonical_config(scenario),
            code_version=__version__,
            master_seed=scenario.master_seed,
            n_trials=0,
            started_at=_utc_now(),
            finished_at=_utc_now(),
            complete=True,
            outputs={"scan.csv": file_sha256(out_dir / "scan.csv")},
            scan_summary=[{
                "param": param_path,
                "value": p.value,
                "scenario_id": p.scenario_id,
                "w": p.report.wineland.w,
                "ci_lo": p.report.wineland.ci_lo,
                "ci_hi": p.report.wineland.ci_hi,
            } for p in points],
        )
        write_manifest(manifest, out_dir / MANIFEST_NAME)
    return points


_SCAN_COLUMNS = ("param", "value", "w", "w_db", "ci_lo", "ci_hi", "n_trials",
                 "delta_theta_rad", "delta_theta_sql_rad", "contrast_initial",
                 "contrast_final", "raw_variance_ratio", "scenario_id")


def save_scan_csv(param_path: str, points: list[ScanPoint], path) -> None:
    """Scan summary table, one row per swept value."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_SCAN_COLUMNS)
        for p in points:
            r = p.report.wineland
            writer.writerow((param_path, p.value, r.w, r.w_db, r.ci_lo,
                             r.ci_hi, r.n_trials, r.delta_theta,
                             r.delta_theta_sql, r.contrast_initial,
                             r.contrast_final, r.raw_variance_ratio,
                             p.scenario_id))


# ---------------------------------------------------------------------------
# record-file analysis entry point

def analyze_records_file(records_path: str | Path, mode: str = "auto",
                         n_resamples: int = 2000, bootstrap_seed: int = 0
                         ) -> AnalysisReport:
    """Analyze a persisted record file.

    The sibling manifest, when present, supplies the scenario config so
    the cavity transduction constants and the nominal atom number do not
    have to be guessed from the records.
    """
    records_path = Path(records_path)
    records = read_records(records_path)
    shifts = None
    n_atoms = None
    manifest_path = records_path.with_name(MANIFEST_NAME)
    if manifest_path.exists():
        manifest = read_manifest(manifest_path)
        scenario = scenario_from_dict(manifest.config)
        if isinstance(scenario, InterferometerScenario):
            shifts = scenario_shifts(scenario)
            n_atoms = scenario.n_atoms
    return analyze_records(records, shifts=shifts, n_atoms=n_atoms,
                           mode=mode, n_resamples=n_resamples,
                           bootstrap_seed=bootstrap_seed)
