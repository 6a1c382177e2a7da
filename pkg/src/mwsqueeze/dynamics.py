"""Entanglement-generating channels and decoherence bookkeeping.

Two coherent channels act on collective-spin states: one-axis twisting
(a diagonal J_z^2 phase profile, optionally split around a spin-echo pi
pulse) and quantum non-demolition measurement of J_z (a Gaussian Kraus
update conditioned on a sampled homodyne outcome). Incoherent effects
do not touch the state vector at all; they accumulate in a
``ContrastLedger`` (coherent fraction, atoms lost from the pseudospin,
added J_z diffusion) that downstream estimators fold into observables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .constants import TWO_PI
from .spins import (
    CollectiveSpinState,
    SpinProjectionAxis,
    covariance_yz,
    expect,
    new_css,
    rotate,
    sample_jz,
)

__all__ = [
    "ContrastLedger",
    "NoiseConfig",
    "TwistSpec",
    "bloch_azimuth",
    "twist",
    "optimal_twist_analysis",
    "qnd_measure",
    "imprecision_from_photons",
    "apply_scattering",
    "free_evolve",
]


@dataclass(frozen=True)
class ContrastLedger:
    """Scalar record of decoherence accumulated along one trial.

    Attributes
    ----------
    coherent_fraction : float
        Multiplicative Bloch-vector shortening in [0, 1]; starts at 1.
    lost_atoms : int
        Atoms pumped out of the pseudospin manifold; they stop
        contributing signal entirely.
    added_jz_diffusion : float
        Extra J_z variance (dimensionless, same units as Var J_z)
        injected by scattering events that dephase without loss.
    clipped : bool
        Set when a scattering probability had to be clipped to 1.
    """

    coherent_fraction: float = 1.0
    lost_atoms: int = 0
    added_jz_diffusion: float = 0.0
    clipped: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.coherent_fraction <= 1.0:
            raise ValueError("coherent_fraction must lie in [0, 1]")
        if self.lost_atoms < 0:
            raise ValueError("lost_atoms must be >= 0")
        if self.added_jz_diffusion < 0.0:
            raise ValueError("added_jz_diffusion must be >= 0")


@dataclass(frozen=True)
class NoiseConfig:
    """Imperfection knobs shared by the measurement and evolution channels.

    Attributes
    ----------
    quantum_efficiency : float
        Net detection efficiency q in (0, 1] for probe photons,
        sweep-path losses included.
    imprecision_coeff : float
        Dimensionless coefficient A mapping a photon budget M to the
        J_z measurement variance A / (q M).
    scatter_coeff : float
        Free-space scattering probability per probe photon per atom.
    raman_decorrelation_fraction : float
        Fraction of scattering events that eject the atom from the
        two-level pseudospin; the remainder only diffuse J_z.
    readout_floor_db : float
        Technical noise floor of the final population readout,
        expressed in dB below the projection noise of the nominal
        ensemble.
    pulse_loss_prob : float
        Atom loss probability per coherent-control pulse.
    dephasing_coeff : float
        RMS collective phase accrued per second of free evolution
        (rad/s); models slow shot-to-shot phase wander.
    atom_number_cv : float
        Fractional shot-to-shot spread of the prepared atom number.
    """

    quantum_efficiency: float = 0.1
    imprecision_coeff: float = 1.0
    scatter_coeff: float = 0.0
    raman_decorrelation_fraction: float = 0.5
    readout_floor_db: float = 15.0
    pulse_loss_prob: float = 0.002
    dephasing_coeff: float = 0.0
    atom_number_cv: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.quantum_efficiency <= 1.0:
            raise ValueError("quantum_efficiency must lie in (0, 1]")
        if self.imprecision_coeff <= 0.0:
            raise ValueError("imprecision_coeff must be > 0")
        if self.scatter_coeff < 0.0:
            raise ValueError("scatter_coeff must be >= 0")
        if not 0.0 <= self.raman_decorrelation_fraction <= 1.0:
            raise ValueError("raman_decorrelation_fraction must lie in [0, 1]")
        if not 0.0 <= self.pulse_loss_prob < 1.0:
            raise ValueError("pulse_loss_prob must lie in [0, 1)")
        if self.dephasing_coeff < 0.0:
            raise ValueError("dephasing_coeff must be >= 0")
        if self.atom_number_cv < 0.0:
            raise ValueError("atom_number_cv must be >= 0")
        if not math.isfinite(self.readout_floor_db):
            raise ValueError("readout_floor_db must be finite")


@dataclass(frozen=True)
class TwistSpec:
    """One-axis-twisting pulse description.

    ``mu`` is the total shearing strength (integrated chi over both
    echo arms); ``chi_oat`` fixes the wall-clock duration mu/chi_oat
    used by schedulers, not the applied unitary.
    """

    mu: float
    chi_oat: float = TWO_PI * 10.0
    echo: bool = True

    def __post_init__(self) -> None:
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")
        if self.chi_oat <= 0.0:
            raise ValueError("chi_oat must be > 0")


def _shear(state: CollectiveSpinState, mu: float) -> CollectiveSpinState:
    """Apply the diagonal phase profile exp(-i mu m^2)."""
    phases = np.exp(-1j * mu * state.m_values**2)
    return CollectiveSpinState(state.n_atoms, state.amplitudes * phases)


def bloch_azimuth(state: CollectiveSpinState) -> float:
    """Azimuth of the mean-spin direction; 0 if it has no equatorial part."""
    mean_x, _ = expect(state, SpinProjectionAxis.x())
    mean_y, _ = expect(state, SpinProjectionAxis.y())
    if math.hypot(mean_x, mean_y) < 1e-9 * state.j:
        return 0.0
    return math.atan2(mean_y, mean_x)


def twist(state: CollectiveSpinState, spec: TwistSpec) -> CollectiveSpinState:
    """Shear the state with the one-axis-twisting unitary exp(-i mu Jz^2).

    With ``spec.echo`` the shearing is split into two mu/2 arms around a
    pi rotation about the mean-spin axis. The echo cancels phases linear
    in J_z (mean-field and static shifts) while leaving the quadratic
    shearing intact; on states with a symmetric J_z distribution the two
    variants produce the same physical state.

    Parameters
    ----------
    state : CollectiveSpinState
    spec : TwistSpec

    Returns
    -------
    CollectiveSpinState
    """
    if spec.mu == 0.0:
        return state
    if not spec.echo:
        return _shear(state, spec.mu)
    axis = SpinProjectionAxis.equatorial(bloch_azimuth(state))
    half = _shear(state, 0.5 * spec.mu)
    flipped = rotate(half, math.pi, axis)
    return _shear(flipped, 0.5 * spec.mu)


def optimal_twist_analysis(n_atoms: int, mu: float) -> tuple[float, float]:
    """Minimum spin variance of a twisted CSS and the axis that attains it.

    Twists an equatorial coherent state by ``mu`` and minimizes the
    variance of J projected on axes at angle alpha from z in the y-z
    plane, alpha tipping toward -y (the convention that makes the
    shear's minor axis start at +pi/4 and relax to 0 as mu grows).
    V(alpha) is quadratic in (cos alpha, sin alpha), so the minimum
    comes from the 2x2 covariance block in closed form rather than a
    scan.

    Returns
    -------
    v_min : float
        Minimum variance normalized to the coherent-state value N/4.
    alpha0 : float
        Minimizing axis angle from z, in (-pi/2, pi/2]; 0 when the
        variance is isotropic.
    """
    if n_atoms < 2:
        raise ValueError("n_atoms must be >= 2")
    state = _shear(new_css(n_atoms, 0.5 * math.pi, 0.0), mu)
    var_y, var_z, cov = covariance_yz(state)
    mid = 0.5 * (var_z + var_y)
    p = 0.5 * (var_z - var_y)
    q = -cov
    swing = math.hypot(p, q)
    v_min = (mid - swing) / (0.25 * n_atoms)
    if swing < 1e-12 * max(mid, 1.0):
        return v_min, 0.0
    alpha0 = 0.5 * math.atan2(-q, -p)
    return v_min, alpha0


def qnd_measure(
    state: CollectiveSpinState, sigma: float, rng: np.random.Generator
) -> tuple[float, CollectiveSpinState]:
    """Measure J_z with Gaussian imprecision and apply the back-action.

    Samples an outcome x from the exact marginal sum_m |c_m|^2
    Normal(x; m, sigma^2), then conditions the state with the Gaussian
    Kraus operator exp(-(m - x)^2 / (4 sigma^2)) and renormalizes.

    Parameters
    ----------
    sigma : float
        Measurement imprecision in J_z units, > 0.

    Returns
    -------
    outcome : float
    conditioned : CollectiveSpinState
    """
    if sigma <= 0.0:
        raise ValueError("sigma must be > 0")
    m_true = sample_jz(state, rng)
    outcome = m_true + sigma * rng.standard_normal()
    # log-domain weights: harmless overflow-free even for sigma -> 0
    log_w = -((state.m_values - outcome) ** 2) / (4.0 * sigma * sigma)
    log_w -= log_w.max()
    conditioned = CollectiveSpinState(
        state.n_atoms, state.amplitudes * np.exp(log_w)
    )
    return float(outcome), conditioned


def imprecision_from_photons(
    m_photons: float,
    noise: NoiseConfig,
    n_atoms: int | None = None,
    shifts=None,
) -> float:
    """J_z imprecision sigma for a probe photon budget.

    sigma^2 = A / (q M) with A = ``noise.imprecision_coeff`` and
    q = ``noise.quantum_efficiency``. The calibrated coefficient already
    folds in the cavity transduction gain, so ``n_atoms`` and ``shifts``
    are accepted for interface symmetry but do not enter the value.
    """
    if m_photons <= 0:
        raise ValueError("m_photons must be > 0")
    variance = noise.imprecision_coeff / (noise.quantum_efficiency * m_photons)
    return math.sqrt(variance)


def apply_scattering(
    state: CollectiveSpinState,
    ledger: ContrastLedger,
    m_photons: float,
    noise: NoiseConfig,
    rng: np.random.Generator,
) -> tuple[CollectiveSpinState, ContrastLedger]:
    """Account for free-space probe scattering in the contrast ledger.

    Each live atom scatters with probability p = scatter_coeff * M
    (clipped to 1 with the ledger flagged). The coherent fraction drops
    by (1 - p); a binomial draw moves the decorrelating fraction of
    scatterers to ``lost_atoms``, and the remainder contributes
    p (1 - r) n_live / 4 of J_z diffusion variance. The state vector is
    returned untouched; estimators consume the ledger instead.
    """
    if m_photons < 0:
        raise ValueError("m_photons must be >= 0")
    p = noise.scatter_coeff * m_photons
    if p == 0.0:
        return state, ledger
    clipped = ledger.clipped
    if p > 1.0:
        p = 1.0
        clipped = True
    n_live = state.n_atoms - ledger.lost_atoms
    if n_live <= 0:
        return state, replace(ledger, clipped=clipped)
    r = noise.raman_decorrelation_fraction
    newly_lost = int(rng.binomial(n_live, p * r)) if r > 0.0 else 0
    updated = ContrastLedger(
        coherent_fraction=ledger.coherent_fraction * (1.0 - p),
        lost_atoms=ledger.lost_atoms + newly_lost,
        added_jz_diffusion=ledger.added_jz_diffusion
        + p * (1.0 - r) * 0.25 * n_live,
        clipped=clipped,
    )
    return state, updated


def free_evolve(
    state: CollectiveSpinState,
    t_evol: float,
    signal_phase: float,
    noise: NoiseConfig,
    rng: np.random.Generator,
) -> CollectiveSpinState:
    """Accrue an interferometer phase during free evolution.

    Rotates the state about z by ``signal_phase`` plus a zero-mean
    Gaussian dephasing angle of RMS ``noise.dephasing_coeff * t_evol``.

    Parameters
    ----------
    t_evol : float
        Evolution time in seconds, >= 0.
    signal_phase : float
        Deterministic phase to imprint, rad.
    """
    if t_evol < 0.0:
        raise ValueError("t_evol must be >= 0")
    angle = signal_phase
    wander = noise.dephasing_coeff * t_evol
    if wander > 0.0:
        angle += wander * rng.standard_normal()
    return rotate(state, angle, SpinProjectionAxis.z())
