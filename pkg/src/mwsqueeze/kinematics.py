"""Axial momentum bookkeeping for the interferometer beamsplitters.

Momentum is tracked classically: a distribution of statistical weights
on a uniform grid in units of hbar k, with separate channels for the
two hyperfine labels and a bucket for atoms removed from the sample.
Two-photon pulses exchange weight between classes two photon recoils
apart with the standard Rabi lineshape; phases are left to the spin
layer, which is the only place they matter for the squeezing
estimators.

The two-photon detuning convention folds out both the AC-Stark shift
and the single-step recoil: an atom at rest is resonant at delta = 0,
and an atom at p (hbar k units) is resonant at its Doppler detuning
4 omega_r p. That makes one number, ``doppler_detuning``, serve the
velocimetry spectra and the transfer resonance condition alike.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cavity import PhysicsParams
from .errors import SimulationError

__all__ = [
    "MomentumDistribution",
    "RamanPulse",
    "thermal_distribution",
    "discrete_classes",
    "chirp_rate",
    "doppler_detuning",
    "transfer_probability",
    "velocity_select",
    "velocity_spectrum",
    "apply_momentum_pulse",
    "accumulated_phase",
    "save_distribution_csv",
    "save_spectrum_csv",
]

MAX_GRID_STEP = 0.01  # hbar k; velocimetry features are ~0.1 hbar k wide


@dataclass(frozen=True)
class MomentumDistribution:
    """Classical axial momentum distribution of the ensemble.

    Attributes
    ----------
    grid : ndarray
        Uniform, strictly increasing momenta in units of hbar k, with
        spacing at most 0.01 hbar k.
    weight_up, weight_down : ndarray
        Non-negative statistical weight per grid point for the two
        hyperfine labels; the combined total is at most 1.
    lost : float
        Weight removed from the sample (blown away or leaked) by
        earlier pulses; kept so sequences conserve weight exactly.
    """

    grid: np.ndarray
    weight_up: np.ndarray
    weight_down: np.ndarray
    lost: float = 0.0

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        w_up = np.asarray(self.weight_up, dtype=float)
        w_down = np.asarray(self.weight_down, dtype=float)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid must be a 1-d array of >= 2 points")
        steps = np.diff(grid)
        if np.any(steps <= 0.0):
            raise ValueError("grid must be strictly increasing")
        step = steps[0]
        if np.max(np.abs(steps - step)) > 1e-9 * step:
            raise ValueError("grid must be uniform")
        if step > MAX_GRID_STEP * (1.0 + 1e-9):
            raise ValueError("grid resolution must be <= 0.01 hbar k")
        if w_up.shape != grid.shape or w_down.shape != grid.shape:
            raise ValueError("weights must match the grid shape")
        if np.any(w_up < -1e-12) or np.any(w_down < -1e-12):
            raise ValueError("weights must be non-negative")
        if self.lost < -1e-12:
            raise ValueError("lost weight must be non-negative")
        total = w_up.sum() + w_down.sum()
        if total > 1.0 + 1e-9:
            raise ValueError("total weight must be <= 1")
        for name, arr in (("grid", grid),
                          ("weight_up", np.clip(w_up, 0.0, None)),
                          ("weight_down", np.clip(w_down, 0.0, None))):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def total_weight(self) -> float:
        return float(self.weight_up.sum() + self.weight_down.sum())

    def population(self, lo: float, hi: float,
                   spin: str | None = None) -> float:
        """Total weight with momentum in [lo, hi]."""
        mask = (self.grid >= lo) & (self.grid <= hi)
        if spin == "up":
            return float(self.weight_up[mask].sum())
        if spin == "down":
            return float(self.weight_down[mask].sum())
        return float(self.weight_up[mask].sum()
                     + self.weight_down[mask].sum())

    def mean_momentum(self) -> float:
        w = self.weight_up + self.weight_down
        return float(np.dot(self.grid, w) / w.sum())

    def rms_spread(self) -> float:
        w = self.weight_up + self.weight_down
        total = w.sum()
        mean = np.dot(self.grid, w) / total
        return float(math.sqrt(np.dot((self.grid - mean) ** 2, w) / total))


def thermal_distribution(fwhm: float = 5.0, center: float = 0.0,
                         step: float = 0.01, half_span: float | None = None,
                         spin: str = "down") -> MomentumDistribution:
    """Gaussian thermal sample, total weight 1, in one hyperfine label.

    Default 5 hbar k FWHM, the width of an unselected cloud.
    """
    sigma = fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    if half_span is None:
        half_span = max(5.0 * sigma, 1.0)
    n_half = int(math.ceil(half_span / step))
    grid = center + step * np.arange(-n_half, n_half + 1)
    weights = np.exp(-0.5 * ((grid - center) / sigma) ** 2)
    weights /= weights.sum()
    zeros = np.zeros_like(weights)
    if spin == "up":
        return MomentumDistribution(grid, weights, zeros)
    return MomentumDistribution(grid, zeros, weights)


def discrete_classes(classes: list[tuple[float, float, str]],
                     step: float = 0.01,
                     pad: float = 1.0) -> MomentumDistribution:
    """Distribution of sharp momentum classes [(p, weight, spin), ...].

    Each class lands on the nearest grid point; momenta must sit within
    half a step of the grid so nothing silently migrates.
    """
    if not classes:
        raise ValueError("need at least one class")
    momenta = [c[0] for c in classes]
    lo = math.floor((min(momenta) - pad) / step) * step
    n_bins = int(round((max(momenta) + pad - lo) / step)) + 1
    grid = lo + step * np.arange(n_bins)
    w_up = np.zeros(n_bins)
    w_down = np.zeros(n_bins)
    for p, weight, spin in classes:
        idx = int(round((p - lo) / step))
        if abs(grid[idx] - p) > 1e-9:
            raise ValueError(f"class momentum {p} is not on the grid")
        if spin == "up":
            w_up[idx] += weight
        elif spin == "down":
            w_down[idx] += weight
        else:
            raise ValueError(f"unknown spin label: {spin!r}")
    return MomentumDistribution(grid, w_up, w_down)


@dataclass(frozen=True)
class RamanPulse:
    """Two-photon beamsplitter pulse.

    ``kind`` is "raman" (momentum transfer flips the hyperfine label)
    or "bragg" (label preserved). ``ideal`` restricts the transfer to
    exactly resonant classes at the nominal sin^2(area/2) probability,
    for sequences where off-resonant leakage is not the point.
    ``stark_offset`` is the residual uncompensated AC-Stark shift of
    the resonance, rad/s.
    """

    rabi: float
    duration: float
    two_photon_detuning: float = 0.0
    kind: str = "raman"
    axis_azimuth: float = 0.0
    ideal: bool = False
    stark_offset: float = 0.0

    def __post_init__(self) -> None:
        if self.rabi <= 0.0:
            raise ValueError("rabi must be > 0")
        if self.duration < 0.0:
            raise ValueError("duration must be >= 0")
        if self.kind not in ("raman", "bragg"):
            raise ValueError(f"unknown pulse kind: {self.kind!r}")


def chirp_rate(params: PhysicsParams) -> float:
    """Frequency chirp 2 k g_par that keeps a falling atom resonant, rad/s^2."""
    return 2.0 * params.wavenumber * params.gravity_parallel


def doppler_detuning(p, params: PhysicsParams):
    """Two-photon resonance offset of a class at momentum p (hbar k).

    4 omega_r per hbar k: two photon momenta per transfer, and the
    recoil of the transfer itself is folded into the delta = 0 origin.
    """
    return 4.0 * params.recoil_frequency * np.asarray(p, dtype=float)


def transfer_probability(pulse: RamanPulse, delta_eff):
    """Rabi transfer probability at effective detuning delta_eff (rad/s)."""
    delta = np.asarray(delta_eff, dtype=float)
    omega_sq = pulse.rabi**2
    general_sq = omega_sq + delta**2
    angle = 0.5 * np.sqrt(general_sq) * pulse.duration
    prob = (omega_sq / general_sq) * np.sin(angle) ** 2
    return np.clip(prob, 0.0, 1.0) if prob.ndim else float(min(max(prob, 0.0), 1.0))


def velocity_select(
    dist: MomentumDistribution,
    rabi: float,
    delta_vs: float,
    passes: int = 1,
    params: PhysicsParams | None = None,
) -> tuple[MomentumDistribution, float]:
    """Keep only atoms a pi-pulse lineshape at delta_vs transfers.

    Non-transferred atoms are removed from the sample (blown away), so
    the surviving slice is renormalized back to the original total and
    the kept fraction is returned for atom-number bookkeeping.
    """
    if passes < 1:
        raise ValueError("passes must be >= 1")
    params = params or PhysicsParams()
    pulse = RamanPulse(rabi=rabi, duration=math.pi / rabi,
                       two_photon_detuning=delta_vs)
    line = transfer_probability(
        pulse, delta_vs - doppler_detuning(dist.grid, params)
    ) ** passes
    w_up = dist.weight_up * line
    w_down = dist.weight_down * line
    before = dist.total_weight
    kept = float(w_up.sum() + w_down.sum())
    survival = kept / before
    if survival < 1e-6:
        raise SimulationError(
            "velocity selection removed the entire ensemble"
        )
    scale = before / kept
    selected = MomentumDistribution(
        dist.grid, w_up * scale, w_down * scale, dist.lost
    )
    return selected, survival


def velocity_spectrum(
    dist: MomentumDistribution,
    rabi: float,
    delta_grid,
    params: PhysicsParams | None = None,
) -> np.ndarray:
    """Velocimetry scan: transferred population vs probe detuning.

    spectrum(delta) = sum_p w(p) P(delta - doppler(p)) for a pi pulse
    at the given Rabi frequency.
    """
    delta_grid = np.asarray(delta_grid, dtype=float)
    if np.any(np.diff(delta_grid) <= 0.0):
        raise ValueError("detuning grid must be strictly increasing")
    params = params or PhysicsParams()
    pulse = RamanPulse(rabi=rabi, duration=math.pi / rabi)
    offsets = delta_grid[:, None] - doppler_detuning(dist.grid, params)[None, :]
    weights = dist.weight_up + dist.weight_down
    return transfer_probability(pulse, offsets) @ weights


def apply_momentum_pulse(
    dist: MomentumDistribution,
    pulse: RamanPulse,
    params: PhysicsParams | None = None,
    loss_prob: float = 0.0,
) -> MomentumDistribution:
    """Exchange weight between classes 2 hbar k apart.

    Each pair (p, p+2) undergoes a two-level Rabi exchange with
    probability from the lineshape at that pair's resonance offset;
    raman pulses relabel the hyperfine state on transfer. A fraction
    ``loss_prob`` of all weight leaks to the lost bucket per pulse.
    Weight is conserved exactly (kept + lost).
    """
    if not 0.0 <= loss_prob < 1.0:
        raise ValueError("loss_prob must lie in [0, 1)")
    if pulse.duration == 0.0 and loss_prob == 0.0:
        return dist
    params = params or PhysicsParams()
    step = dist.step
    shift = 2.0 / step
    n_shift = int(round(shift))
    if abs(n_shift - shift) > 1e-6:
        raise ValueError("grid step must divide the 2 hbar k transfer")

    # pad the top so transfer off the current edge stays on the grid
    grid = np.concatenate(
        [dist.grid, dist.grid[-1] + step * np.arange(1, n_shift + 1)]
    )
    keep = 1.0 - loss_prob
    w_up = np.concatenate([dist.weight_up * keep, np.zeros(n_shift)])
    w_down = np.concatenate([dist.weight_down * keep, np.zeros(n_shift)])
    lost = dist.lost + dist.total_weight * loss_prob

    # exchange probability for the pair (p, p + 2), indexed by the
    # lower partner; resonance sits at that partner's Doppler detuning
    lower = grid[:-n_shift]
    if pulse.ideal:
        on_res = np.abs(
            pulse.two_photon_detuning - pulse.stark_offset
            - doppler_detuning(lower, params)
        ) < 1e-9 * (1.0 + abs(pulse.two_photon_detuning))
        pair_prob = np.where(
            on_res, math.sin(0.5 * pulse.rabi * pulse.duration) ** 2, 0.0
        )
    else:
        delta_eff = (pulse.two_photon_detuning - pulse.stark_offset
                     - doppler_detuning(lower, params))
        pair_prob = transfer_probability(pulse, delta_eff)

    # per-bin outward fractions; a bin couples up via its own pair and
    # down via the pair below it, so cap the summed outflow at 1
    n_bins = grid.size
    frac_up = np.zeros(n_bins)
    frac_down = np.zeros(n_bins)
    frac_up[:-n_shift] = pair_prob
    frac_down[n_shift:] = pair_prob
    out_total = frac_up + frac_down
    scale = np.where(out_total > 1.0, 1.0 / np.maximum(out_total, 1e-300), 1.0)
    frac_up *= scale
    frac_down *= scale

    new_up, new_down = w_up.copy(), w_down.copy()
    for w, new_same, new_other in (
        (w_up, new_up, new_down),
        (w_down, new_down, new_up),
    ):
        flow_up = frac_up * w
        flow_down = frac_down * w
        new_same -= flow_up + flow_down
        target = new_other if pulse.kind == "raman" else new_same
        target[n_shift:] += flow_up[:-n_shift]
        target[:-n_shift] += flow_down[n_shift:]

    # drop the padding again if nothing actually moved into it
    if new_up[-n_shift:].sum() + new_down[-n_shift:].sum() < 1e-15:
        grid = grid[:-n_shift]
        new_up = new_up[:-n_shift]
        new_down = new_down[:-n_shift]
    return MomentumDistribution(grid, new_up, new_down, lost)


def accumulated_phase(
    t_evol: float,
    frame: str,
    chirp_b: float | None = None,
    params: PhysicsParams | None = None,
) -> float:
    """Gravity-induced interferometer phase after evolution time T.

    Lab frame: 2 k g_par T^2. Falling frame: (2 k g_par - b) T^2, zero
    when the chirp exactly tracks gravity.
    """
    if t_evol < 0.0:
        raise ValueError("t_evol must be >= 0")
    params = params or PhysicsParams()
    gravity_term = 2.0 * params.wavenumber * params.gravity_parallel
    if frame == "lab":
        return gravity_term * t_evol**2
    if frame == "falling":
        b = chirp_rate(params) if chirp_b is None else chirp_b
        return (gravity_term - b) * t_evol**2
    raise ValueError(f"unknown frame: {frame!r}")


def save_distribution_csv(dist: MomentumDistribution, path) -> None:
    """Write momentum_hbark,weight rows (hyperfine labels combined)."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["momentum_hbark", "weight"])
        combined = dist.weight_up + dist.weight_down
        for p, w in zip(dist.grid, combined):
            writer.writerow([f"{p:.6f}", f"{w:.12e}"])


def save_spectrum_csv(delta_grid, spectrum, path) -> None:
    """Write detuning_hz,population rows (grid given in rad/s)."""
    delta_grid = np.asarray(delta_grid, dtype=float)
    spectrum = np.asarray(spectrum, dtype=float)
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["detuning_hz", "population"])
        for d, s in zip(delta_grid, spectrum):
            writer.writerow([f"{d / (2.0 * math.pi):.6f}", f"{s:.12e}"])
