"""Estimator pipeline from raw trial records to metrological gain.

Each trial yields pairs of cavity frequency shifts. This module inverts
them to collective-spin observables, fits readout fringes, reconstructs
phase estimates with the small dispersive cross-talk corrections, and
scores the phase resolution against the standard quantum limit via the
Wineland parameter W with bootstrap confidence intervals. It also
provides the variance-ellipse fit and the rotated-section tomography
used to characterize squeezed states.

Conventions
-----------
Readout fringes are fitted on the raw shift difference omega_1 - omega_2
as a function of the readout azimuth. For a final-readout pair the
difference equals (2 chi2 - chi_down) * J * sin(phase), so the fitted
amplitude converts to a Bloch vector length as A / (2 chi2 - chi_down);
when no shifts are supplied, amplitudes are taken to be in spin units
already (A = J).

Section angles alpha follow the same convention as
``dynamics.optimal_twist_analysis``: the measured axis lies at angle
alpha from z in the y-z plane, tipping toward -y, realized by rotating
the state by -alpha about its Bloch vector before a J_z measurement.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .cavity import DispersiveShifts
from .dynamics import bloch_azimuth
from .errors import FitError, MissingOutcomeError
from .records import TrialRecord
from .spins import CollectiveSpinState, SpinProjectionAxis, rotate

__all__ = [
    "FringeFit",
    "WinelandResult",
    "EllipseFit",
    "TomographyMap",
    "AnalysisReport",
    "fit_fringe",
    "jz_from_shifts",
    "theta_from_record",
    "bloch_length",
    "wineland",
    "variance_vs_alpha",
    "tomography",
    "analyze_records",
    "save_analysis_csv",
    "save_fringe_csv",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FringeFit:
    """Parameters of y0 + A sin(phase - phase0) fitted to a readout fringe.

    The amplitude is nonnegative by construction; the sign is absorbed
    into phase0, reduced to [0, 2pi). Standard errors come from the
    residual variance propagated through the fit's parameter covariance.
    """

    y0: float
    amplitude: float
    phase0: float
    y0_se: float
    amplitude_se: float
    phase0_se: float
    residual_rms: float
    n_points: int = 0

    def __post_init__(self):
        if self.amplitude < 0.0:
            raise ValueError("amplitude must be >= 0")
        if not 0.0 <= self.phase0 < TWO_PI:
            raise ValueError("phase0 must lie in [0, 2pi)")

    def value(self, phase):
        """Evaluate the fitted fringe at the given phase(s)."""
        return self.y0 + self.amplitude * np.sin(np.asarray(phase, dtype=float)
                                                 - self.phase0)


@dataclass(frozen=True)
class WinelandResult:
    """Phase resolution of an ensemble of trials relative to the SQL.

    ``w`` is (delta_theta / delta_theta_sql)^2; values below 1 certify
    entanglement-enhanced resolution. ``w_db`` = -10 log10(w), so
    positive dB means below the SQL. ``raw_variance_ratio`` = w * c_i
    compares the measured phase variance against the projection noise
    of the full loaded ensemble read out at the reference contrast; it
    is reported alongside w because noise cancellation and entanglement
    contribute to it jointly.
    """

    w: float
    w_db: float
    delta_theta: float
    delta_theta_sql: float
    ci_lo: float
    ci_hi: float
    n_trials: int
    contrast_initial: float
    contrast_final: float
    raw_variance_ratio: float

    def __post_init__(self):
        if self.w <= 0.0:
            raise ValueError("w must be > 0")
        if not self.ci_lo <= self.w <= self.ci_hi:
            raise ValueError("confidence interval must bracket w")
        if self.n_trials < 2:
            raise ValueError("n_trials must be >= 2")


@dataclass(frozen=True)
class EllipseFit:
    """Sinusoidal fit V(alpha) = a - c cos(2 (alpha - alpha0)) with c >= 0.

    ``alpha0`` is the section angle of minimum variance, in
    (-pi/2, pi/2]; ``v_min`` = a - c. Standard errors propagate the
    residual scatter of the per-angle variances through the linearized
    fit.
    """

    mean_level: float
    modulation: float
    alpha0: float
    v_min: float
    v_min_se: float
    alpha0_se: float

    def __post_init__(self):
        if self.modulation < 0.0:
            raise ValueError("modulation must be >= 0")

    def value(self, alpha):
        """Evaluate the fitted variance section at the given angle(s)."""
        return self.mean_level - self.modulation * np.cos(
            2.0 * (np.asarray(alpha, dtype=float) - self.alpha0))


@dataclass(frozen=True)
class TomographyMap:
    """Rotated-section histograms of J_z samples over a grid of angles."""

    alpha_grid: np.ndarray
    bin_edges: np.ndarray
    counts: np.ndarray
    section_mean: np.ndarray
    section_variance: np.ndarray


@dataclass(frozen=True)
class AnalysisReport:
    """Everything the record-level analysis produces for one scenario."""

    scenario_id: str
    mode: str
    n_atoms: int
    wineland: "WinelandResult"
    fringe_with: FringeFit
    fringe_without: FringeFit


def fit_fringe(phases: Sequence[float], values: Sequence[float]) -> FringeFit:
    """Least-squares fit of y0 + A sin(phase - phase0) to fringe samples.

    The model is linear in (y0, B, C) with y = y0 + B sin(phase)
    + C cos(phase), so the global optimum is found by one exact
    least-squares solve; A = hypot(B, C) and phase0 = atan2(-C, B)
    recover the amplitude-phase form deterministically.

    Parameters
    ----------
    phases : array-like
        Fringe abscissa, rad. At least 5 points spanning at least half
        a period (pi).
    values : array-like
        Observed fringe ordinates.

    Returns
    -------
    FringeFit

    Raises
    ------
    FitError
        Fewer than 5 points, span below half a period, a degenerate
        phase design, or an amplitude indistinguishable from zero at
        one standard error.
    """
    phi = np.asarray(phases, dtype=float)
    y = np.asarray(values, dtype=float)
    if phi.ndim != 1 or phi.shape != y.shape:
        raise ValueError("phases and values must be 1-d and equal length")
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(y))):
        raise ValueError("phases and values must be finite")
    n = phi.size
    if n < 5:
        raise FitError(f"need at least 5 fringe points, got {n}")
    span = float(phi.max() - phi.min())
    if span < math.pi - 1e-9:
        raise FitError(
            f"fringe phases span {span:.3f} rad, need at least pi")

    design = np.column_stack([np.ones(n), np.sin(phi), np.cos(phi)])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 3:
        raise FitError("degenerate phase design, cannot separate amplitude "
                       "from offset")
    y0, b, c = (float(v) for v in coef)
    residuals = y - design @ coef
    rms = float(np.sqrt(np.mean(residuals**2)))
    s2 = float(residuals @ residuals) / (n - 3)
    cov = s2 * np.linalg.inv(design.T @ design)

    amplitude = math.hypot(b, c)
    phase0 = math.atan2(-c, b) % TWO_PI
    a2 = amplitude * amplitude
    if a2 > 0.0:
        var_amp = (b * b * cov[1, 1] + c * c * cov[2, 2]
                   + 2.0 * b * c * cov[1, 2]) / a2
        var_phase = (c * c * cov[1, 1] + b * b * cov[2, 2]
                     - 2.0 * b * c * cov[1, 2]) / (a2 * a2)
    else:
        var_amp = cov[1, 1] + cov[2, 2]
        var_phase = math.inf
    amplitude_se = math.sqrt(max(var_amp, 0.0))
    phase0_se = math.sqrt(max(var_phase, 0.0)) if math.isfinite(var_phase) \
        else math.inf

    if amplitude <= amplitude_se + 1e-12 * (1.0 + abs(y0)):
        raise FitError("amplitude indistinguishable from zero at one "
                       "standard error", residual_norm=rms)
    return FringeFit(y0=y0, amplitude=amplitude, phase0=phase0,
                     y0_se=math.sqrt(max(cov[0, 0], 0.0)),
                     amplitude_se=amplitude_se, phase0_se=phase0_se,
                     residual_rms=rms, n_points=n)


def _require(record: TrialRecord, field: str) -> float:
    value = getattr(record, field)
    if value is None:
        raise MissingOutcomeError(field)
    return float(value)


def jz_from_shifts(record: TrialRecord, shifts: DispersiveShifts,
                   mode: str) -> float:
    """Collective J_z reconstructed from one cavity shift pair.

    For ``qnd_pre`` the pair straddles the pre-measurement sweep:
    J_z = (omega_1p - omega_2p) / (2 (chi0 - chi_down)). For
    ``pumped_final`` both hyperfine populations are pumped and probed:
    J_z = (omega_1f - omega_2f) / (2 chi2) - (epsilon / chi2) omega_2f,
    where the epsilon term removes the residual pull of the lower state
    on the second shift.

    Raises
    ------
    MissingOutcomeError
        The record lacks an outcome the mode requires.
    """
    if mode == "qnd_pre":
        w1 = _require(record, "omega_1p")
        w2 = _require(record, "omega_2p")
        return (w1 - w2) / (2.0 * (shifts.chi0 - shifts.chi_down))
    if mode == "pumped_final":
        w1 = _require(record, "omega_1f")
        w2 = _require(record, "omega_2f")
        return ((w1 - w2) / (2.0 * shifts.chi2)
                - (shifts.epsilon / shifts.chi2) * w2)
    raise ValueError(f"unknown mode {mode!r}")


def bloch_length(fringe: FringeFit,
                 shifts: DispersiveShifts | None = None) -> float:
    """Bloch vector length implied by a difference-fringe amplitude.

    The final-readout difference swings with amplitude
    (2 chi2 - chi_down) * J, so J = A / (2 chi2 - chi_down). Without
    shifts the amplitude is taken to be in spin units already.
    """
    if shifts is None:
        return fringe.amplitude
    return fringe.amplitude / (2.0 * shifts.chi2 - shifts.chi_down)


def theta_from_record(record: TrialRecord, fringe: FringeFit, mode: str,
                      shifts: DispersiveShifts | None = None) -> float:
    """Phase estimate for one trial, normalized by the fringe amplitude.

    For ``pumped_final``::

        theta = (w1f - w2f)/A - eps (w1f + w2f)/A + 2 eps^2 w2f / A

    which equals (1 - eps) (w1f - w2f - 2 eps w2f) / A exactly, i.e.
    J_zf / J with both reconstructed from the same shift pair; every
    per-atom scale factor cancels at leading order. For ``qnd_pre``
    theta = (w1p - w2p) / (2 A_p) with the pre-sweep transduction
    A_p = A (chi0 - chi_down) / (2 chi2 - chi_down) derived from the
    final-fringe amplitude; without shifts A_p = A / 2 (equal
    transduction gains).

    Raises
    ------
    FitError
        Fringe amplitude is zero.
    MissingOutcomeError
        The record lacks an outcome the mode requires.
    """
    if fringe.amplitude <= 0.0:
        raise FitError("fringe amplitude must be positive to normalize "
                       "phase estimates")
    eps = shifts.epsilon if shifts is not None else 0.0
    if mode == "pumped_final":
        w1 = _require(record, "omega_1f")
        w2 = _require(record, "omega_2f")
        a = fringe.amplitude
        return ((w1 - w2) / a - eps * (w1 + w2) / a
                + 2.0 * eps * eps * w2 / a)
    if mode == "qnd_pre":
        w1 = _require(record, "omega_1p")
        w2 = _require(record, "omega_2p")
        if shifts is None:
            a_pre = 0.5 * fringe.amplitude
        else:
            a_pre = fringe.amplitude * (shifts.chi0 - shifts.chi_down) \
                / (2.0 * shifts.chi2 - shifts.chi_down)
        return (w1 - w2) / (2.0 * a_pre)
    raise ValueError(f"unknown mode {mode!r}")


def _trial_thetas(trials: Sequence[TrialRecord], fringe: FringeFit,
                  mode: str, shifts: DispersiveShifts | None) -> np.ndarray:
    """Per-trial phase estimates; qnd mode subtracts the pre estimate."""
    if mode == "qnd":
        return np.array([
            theta_from_record(r, fringe, "qnd_pre", shifts)
            - theta_from_record(r, fringe, "pumped_final", shifts)
            for r in trials])
    if mode == "final":
        return np.array([theta_from_record(r, fringe, "pumped_final", shifts)
                         for r in trials])
    raise ValueError(f"unknown mode {mode!r}")


def _bootstrap_interval(thetas: np.ndarray, scale: float, w_hat: float,
                        n_resamples: int, seed: int) -> tuple[float, float]:
    """68% bias-corrected percentile bootstrap interval for W.

    Each resample draws its index set from an independent generator
    keyed by (seed, resample index), so the result does not depend on
    how resamples are scheduled across workers.
    """
    n = thetas.size
    boot = np.empty(n_resamples)
    for i in range(n_resamples):
        gen = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(entropy=seed, spawn_key=(i,))))
        idx = gen.integers(0, n, size=n)
        boot[i] = scale * float(np.var(thetas[idx], ddof=1))
    frac = float(np.mean(boot < w_hat))
    tiny = 1.0 / (n_resamples + 1.0)
    z0 = float(ndtri(min(max(frac, tiny), 1.0 - tiny)))
    q_lo = float(ndtr(2.0 * z0 + ndtri(0.16)))
    q_hi = float(ndtr(2.0 * z0 + ndtri(0.84)))
    lo, hi = np.quantile(boot, [q_lo, q_hi])
    return min(float(lo), w_hat), max(float(hi), w_hat)


def wineland(signal_trials: Sequence[TrialRecord], fringe_with: FringeFit,
             fringe_without: FringeFit, n_atoms: int, *,
             mode: str = "final", shifts: DispersiveShifts | None = None,
             n_resamples: int = 2000, bootstrap_seed: int = 0
             ) -> WinelandResult:
    """Wineland parameter of a trial ensemble against the SQL reference.

    delta_theta is the sample standard deviation of the per-trial phase
    estimates (mode ``final``) or of the pre/final differences (mode
    ``qnd``, where the pre measurement cancels common projection
    noise). The reference Bloch length J_c comes from the fringe
    measured without the squeezing step, giving
    delta_theta_sql = 1/sqrt(2 J_c) and W = (delta_theta /
    delta_theta_sql)^2. The 68% confidence interval is a bias-corrected
    percentile bootstrap over trials with the fringe fits held fixed.

    Parameters
    ----------
    signal_trials : sequence of TrialRecord
        At least 30 trials carrying the outcomes the mode requires.
    fringe_with, fringe_without : FringeFit
        Fringe calibrations with and without the squeezing step.
    n_atoms : int
        Nominal loaded atom number N0, used for the contrasts
        C_i = 2 J_c / N0 and C_f = 2 J_s / N0.
    mode : str
        ``final``, ``qnd``, or ``auto`` (qnd when pre outcomes are
        present on every trial).
    shifts : DispersiveShifts, optional
        Transduction constants; omit when amplitudes are in spin units.
    n_resamples : int
        Bootstrap resamples, default 2000.
    bootstrap_seed : int
        Seed for the per-resample generators.
    """
    trials = list(signal_trials)
    if len(trials) < 30:
        raise ValueError(f"need at least 30 trials, got {len(trials)}")
    if n_atoms <= 0:
        raise ValueError("n_atoms must be positive")
    if n_resamples < 100:
        raise ValueError("n_resamples must be >= 100")
    if mode == "auto":
        has_pre = all(r.omega_1p is not None and r.omega_2p is not None
                      for r in trials)
        mode = "qnd" if has_pre else "final"

    j_s = bloch_length(fringe_with, shifts)
    j_c = bloch_length(fringe_without, shifts)
    if j_c <= 0.0 or j_s <= 0.0:
        raise FitError("fringe amplitudes must convert to positive Bloch "
                       "lengths")

    thetas = _trial_thetas(trials, fringe_with, mode, shifts)
    delta_theta = float(np.std(thetas, ddof=1))
    if delta_theta == 0.0:
        raise FitError("phase estimates have zero spread, W is undefined")
    delta_theta_sql = 1.0 / math.sqrt(2.0 * j_c)
    w = (delta_theta / delta_theta_sql)**2
    ci_lo, ci_hi = _bootstrap_interval(thetas, 2.0 * j_c, w,
                                       n_resamples, bootstrap_seed)
    contrast_initial = 2.0 * j_c / n_atoms
    contrast_final = 2.0 * j_s / n_atoms
    return WinelandResult(
        w=w, w_db=-10.0 * math.log10(w), delta_theta=delta_theta,
        delta_theta_sql=delta_theta_sql, ci_lo=ci_lo, ci_hi=ci_hi,
        n_trials=len(trials), contrast_initial=contrast_initial,
        contrast_final=contrast_final,
        raw_variance_ratio=w * contrast_initial)


def variance_vs_alpha(trial_sets: Mapping[float, Sequence[float]]
                      ) -> EllipseFit:
    """Fit the variance-ellipse section through per-angle sample sets.

    Computes the sample variance of each angle's J_z samples and fits
    V(alpha) = a + p cos(2 alpha) + q sin(2 alpha), which is the
    linearization of a - c cos(2 (alpha - alpha0)). Returns the
    minimum, its angle, and standard errors from the residual scatter.

    Parameters
    ----------
    trial_sets : mapping
        Section angle alpha (rad) -> samples measured along that
        section's axis. At least 5 angles, each with at least 2
        samples.

    Raises
    ------
    FitError
        Fewer than 5 angles or a degenerate angle design.
    """
    if len(trial_sets) < 5:
        raise FitError(f"need at least 5 section angles, "
                       f"got {len(trial_sets)}")
    alphas = np.array(sorted(trial_sets), dtype=float)
    variances = np.empty(alphas.size)
    for i, alpha in enumerate(alphas):
        samples = np.asarray(trial_sets[alpha], dtype=float)
        if samples.size < 2:
            raise ValueError("each section needs at least 2 samples")
        variances[i] = np.var(samples, ddof=1)

    design = np.column_stack([np.ones(alphas.size),
                              np.cos(2.0 * alphas), np.sin(2.0 * alphas)])
    coef, _, rank, _ = np.linalg.lstsq(design, variances, rcond=None)
    if rank < 3:
        raise FitError("section angles are degenerate modulo pi")
    a, p, q = (float(v) for v in coef)
    residuals = variances - design @ coef
    s2 = float(residuals @ residuals) / max(alphas.size - 3, 1)
    cov = s2 * np.linalg.inv(design.T @ design)

    c = math.hypot(p, q)
    if c < 1e-300:
        return EllipseFit(mean_level=a, modulation=0.0, alpha0=0.0,
                          v_min=a, v_min_se=math.sqrt(max(cov[0, 0], 0.0)),
                          alpha0_se=math.inf)
    alpha0 = 0.5 * math.atan2(-q, -p)
    grad_vmin = np.array([1.0, -p / c, -q / c])
    var_vmin = float(grad_vmin @ cov @ grad_vmin)
    grad_alpha0 = np.array([0.0, -q / (2.0 * c * c), p / (2.0 * c * c)])
    var_alpha0 = float(grad_alpha0 @ cov @ grad_alpha0)
    return EllipseFit(mean_level=a, modulation=c, alpha0=alpha0,
                      v_min=a - c, v_min_se=math.sqrt(max(var_vmin, 0.0)),
                      alpha0_se=math.sqrt(max(var_alpha0, 0.0)))


def tomography(source, alpha_grid=None, bins: int = 41, *,
               rng: np.random.Generator | None = None,
               samples_per_angle: int = 2000) -> TomographyMap:
    """Histogram J_z along axes rotated through the state's y-z plane.

    For each section angle alpha the state is rotated by -alpha about
    its own Bloch vector and J_z is sampled, so the histogram row at
    alpha is the marginal along the axis at angle alpha from z (tipping
    toward -y). Together the rows reconstruct the quasi-probability
    section by section.

    Parameters
    ----------
    source : CollectiveSpinState or mapping
        Either a state to sample from, or precollected samples keyed
        by section angle (then ``alpha_grid`` is taken from the keys).
    alpha_grid : array-like
        Section angles, rad, spanning at least pi. Required for a
        state source.
    bins : int or array-like
        Histogram bin count (shared edges from the pooled samples) or
        explicit bin edges.
    rng : numpy Generator
        Required source of sampling randomness for a state source.
    samples_per_angle : int
        Draws per section angle for a state source.
    """
    if isinstance(source, CollectiveSpinState):
        if alpha_grid is None:
            raise ValueError("alpha_grid is required for a state source")
        grid = np.asarray(alpha_grid, dtype=float)
        _check_grid(grid)
        if rng is None:
            rng = np.random.default_rng(0)
        axis = SpinProjectionAxis.equatorial(bloch_azimuth(source))
        sample_sets = []
        for alpha in grid:
            rotated = rotate(source, -float(alpha), axis)
            k = rng.choice(source.n_atoms + 1, size=samples_per_angle,
                           p=rotated.probabilities())
            sample_sets.append(k.astype(float) - source.j)
    else:
        grid = np.array(sorted(source), dtype=float)
        _check_grid(grid)
        sample_sets = [np.asarray(source[alpha], dtype=float)
                       for alpha in grid]

    pooled = np.concatenate(sample_sets)
    edges = np.histogram_bin_edges(pooled, bins=bins)
    counts = np.empty((grid.size, edges.size - 1), dtype=np.int64)
    means = np.empty(grid.size)
    variances = np.empty(grid.size)
    for i, samples in enumerate(sample_sets):
        counts[i], _ = np.histogram(samples, bins=edges)
        means[i] = np.mean(samples)
        variances[i] = np.var(samples, ddof=1)
    return TomographyMap(alpha_grid=grid, bin_edges=edges, counts=counts,
                         section_mean=means, section_variance=variances)


def _check_grid(grid: np.ndarray) -> None:
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("alpha grid must be 1-d with at least 2 angles")
    if float(grid.max() - grid.min()) < math.pi - 1e-9:
        raise ValueError("alpha grid must span at least pi")


def _fringe_samples(records: Sequence[TrialRecord]
                    ) -> tuple[list[float], list[float]]:
    phases, diffs = [], []
    for r in records:
        w1 = _require(r, "omega_1f")
        w2 = _require(r, "omega_2f")
        phases.append(r.readout_azimuth)
        diffs.append(w1 - w2)
    return phases, diffs


def analyze_records(records: Sequence[TrialRecord],
                    shifts: DispersiveShifts | None = None,
                    n_atoms: int | None = None, mode: str = "auto",
                    n_resamples: int = 2000, bootstrap_seed: int = 0
                    ) -> AnalysisReport:
    """Full record-level analysis: fringes, phases, Wineland parameter.

    Splits records by role, fits the with/without-squeezing fringes on
    the raw shift difference versus readout azimuth, and scores the
    signal trials with :func:`wineland`.

    Parameters
    ----------
    records : sequence of TrialRecord
        Mixed-role records from one scenario.
    shifts : DispersiveShifts, optional
        Transduction constants; omit for spin-unit synthetic records.
    n_atoms : int, optional
        Nominal atom number; defaults to the median realized number.
    mode : str
        ``auto``, ``qnd``, or ``final``.
    """
    signal = [r for r in records if r.role == "signal"]
    with_rows = [r for r in records if r.role == "fringe_with"]
    without_rows = [r for r in records if r.role == "fringe_without"]
    if not signal:
        raise FitError("no signal trials in the record set")
    if not with_rows or not without_rows:
        raise FitError("record set lacks fringe calibration trials "
                       "(roles fringe_with and fringe_without)")
    fringe_with = fit_fringe(*_fringe_samples(with_rows))
    fringe_without = fit_fringe(*_fringe_samples(without_rows))
    if n_atoms is None:
        n_atoms = int(round(float(np.median(
            [r.n_atoms_actual for r in records]))))
    result = wineland(signal, fringe_with, fringe_without, n_atoms,
                      mode=mode, shifts=shifts, n_resamples=n_resamples,
                      bootstrap_seed=bootstrap_seed)
    resolved = mode
    if resolved == "auto":
        has_pre = all(r.omega_1p is not None and r.omega_2p is not None
                      for r in signal)
        resolved = "qnd" if has_pre else "final"
    return AnalysisReport(scenario_id=signal[0].scenario_id, mode=resolved,
                          n_atoms=n_atoms, wineland=result,
                          fringe_with=fringe_with,
                          fringe_without=fringe_without)


_ANALYSIS_COLUMNS = ("scenario_id", "w", "w_db", "ci_lo", "ci_hi",
                     "n_trials", "delta_theta_rad", "delta_theta_sql_rad",
                     "contrast_initial", "contrast_final",
                     "raw_variance_ratio", "mode", "n_atoms")


def save_analysis_csv(report: AnalysisReport, path) -> None:
    """One-row CSV summary of an analysis report."""
    r = report.wineland
    row = (report.scenario_id, r.w, r.w_db, r.ci_lo, r.ci_hi, r.n_trials,
           r.delta_theta, r.delta_theta_sql, r.contrast_initial,
           r.contrast_final, r.raw_variance_ratio, report.mode,
           report.n_atoms)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_ANALYSIS_COLUMNS)
        writer.writerow(row)


def save_fringe_csv(report: AnalysisReport, path) -> None:
    """Fit report: the two fringe calibrations, one row each."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("role", "y0", "amplitude", "phase0", "y0_se",
                         "amplitude_se", "phase0_se", "residual_rms",
                         "n_points"))
        for role, fit in (("fringe_with", report.fringe_with),
                          ("fringe_without", report.fringe_without)):
            writer.writerow((role, fit.y0, fit.amplitude, fit.phase0,
                             fit.y0_se, fit.amplitude_se, fit.phase0_se,
                             fit.residual_rms, fit.n_points))
