"""Dispersive cavity model: coupling from geometry, per-atom shifts,
homodyne sweep synthesis, and resonance fitting.

The probe couples the spin-up ground state to the excited manifold; each
atom pulls the cavity resonance by a state-dependent dispersive shift.
With ensemble-averaged coupling g, the shifts per atom are

    chi0   = g^2 (B3/dc + B2/(dc + d2) + B1/(dc + d1))          (up, probe tone)
    chi_dn = g^2 (B2d/(dc + d2 - w_hf) + B1d/(dc + d1 - w_hf))  (down, probe tone)
    chi2   = g^2 / dc                                           (up, cycling pump)
    eps    = (chi_dn / 2) / chi2

where dc is the probe detuning from the excited state, d1/d2 the excited
hyperfine splittings, w_hf the ground splitting and B the branching
factors. The reflected field of the single-sided cavity is

    r(Delta) = 1 - eta_c kappa / (i Delta + kappa/2)

whose Q quadrature Im r = eta_c kappa Delta / (Delta^2 + kappa^2/4) is the
swept homodyne observable used for shift measurements.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from . import constants as cn
from .errors import FitError, SingularityError

__all__ = [
    "PhysicsParams",
    "EnsembleGeometry",
    "DispersiveShifts",
    "SweepTrace",
    "effective_coupling",
    "correction_factor",
    "dispersive_shifts",
    "cooperativity",
    "reflection_q",
    "synth_sweep",
    "fit_sweep",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhysicsParams:
    """Cavity geometry, atomic constants and detunings (rad/s, m, kg)."""

    g0: float = TWO_PI * 0.4853e6          # max single-atom vacuum Rabi half-splitting
    kappa: float = TWO_PI * 56e3           # cavity power decay rate
    fsr: float = TWO_PI * 6.7879e9         # free spectral range
    waist_w0: float = 72e-6
    length_l: float = 2.2e-2
    rayleigh_zr: float = 2.1e-2
    delta_c: float = TWO_PI * 175e6        # probe detuning from F'=3
    omega_hf: float = cn.OMEGA_HF
    delta_2: float = cn.DELTA_2
    delta_1: float = cn.DELTA_1
    b3: float = cn.BRANCH_B3
    b2: float = cn.BRANCH_B2
    b1: float = cn.BRANCH_B1
    b2_down: float = cn.BRANCH_B2_DOWN
    b1_down: float = cn.BRANCH_B1_DOWN
    gamma: float = cn.GAMMA_D2
    wavelength: float = cn.WAVELENGTH_D2
    mass: float = cn.M_RB87
    gravity_parallel: float = cn.GRAVITY_PARALLEL
    eta_c: float = 0.9                     # cavity coupling efficiency

    def __post_init__(self):
        for name in ("g0", "kappa", "fsr", "waist_w0", "length_l",
                     "rayleigh_zr", "omega_hf", "gamma", "wavelength", "mass"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("b3", "b2", "b1", "b2_down", "b1_down"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"branching ratio {name} must be in (0, 1)")
        if not 0.0 < self.eta_c <= 1.0:
            raise ValueError("eta_c must be in (0, 1]")

    @property
    def wavenumber(self) -> float:
        return TWO_PI / self.wavelength

    @property
    def recoil_frequency(self) -> float:
        """Single-photon recoil hbar k^2 / (2 m), rad/s."""
        k = self.wavenumber
        return cn.HBAR * k * k / (2.0 * self.mass)


@dataclass(frozen=True)
class EnsembleGeometry:
    """Position moments of the trapped ensemble in the cavity mode."""

    z0: float = 1.0e-3        # axial offset from the waist
    sigma_z: float = 0.5e-3   # rms axial extent
    r_rms: float = 4.7e-6     # rms radial displacement

    def __post_init__(self):
        if self.z0 < 0 or self.sigma_z < 0 or self.r_rms < 0:
            raise ValueError("geometry moments must be non-negative")


@dataclass(frozen=True)
class DispersiveShifts:
    """Per-atom cavity shifts (rad/s) and the relative down-state pull."""

    chi0: float
    chi_down: float
    chi2: float
    epsilon: float


@dataclass(frozen=True)
class SweepTrace:
    """One synthesized homodyne sweep across the (shifted) resonance."""

    detuning_grid: np.ndarray        # rad/s relative to the empty cavity
    q_quadrature: np.ndarray         # normalized to the full reflected field
    sweep_rate: float                # rad/s per s, metadata
    photons_incident: float          # M_i over the whole sweep
    kappa: float
    eta_c: float
    noise_sigma: float

    def __post_init__(self):
        grid = np.asarray(self.detuning_grid, dtype=float)
        if np.any(np.diff(grid) <= 0):
            raise ValueError("detuning grid must be strictly increasing")


def correction_factor(geometry: EnsembleGeometry, params: PhysicsParams) -> float:
    """Coupling reduction f_cor from the ensemble's position spread.

    f_cor = (z0^2 + sigma_z^2) / (2 Zr^2) + r_rms^2 / w0^2
    """
    axial = (geometry.z0 ** 2 + geometry.sigma_z ** 2) / \
        (2.0 * params.rayleigh_zr ** 2)
    radial = (geometry.r_rms / params.waist_w0) ** 2
    return axial + radial


def effective_coupling(params: PhysicsParams,
                       geometry: EnsembleGeometry) -> float:
    """Ensemble-averaged coupling g = (g0 / sqrt(2)) (1 - f_cor), rad/s.

    The sqrt(2) averages the standing-wave intensity over atom positions
    along the axis; f_cor is the second-order geometric correction.
    """
    if geometry.r_rms >= params.waist_w0:
        raise ValueError(
            "r_rms >= w0: coarse-grained coupling average is invalid")
    return (params.g0 / math.sqrt(2.0)) * \
        (1.0 - correction_factor(geometry, params))


def dispersive_shifts(params: PhysicsParams, g: float) -> DispersiveShifts:
    """Per-atom shifts chi0, chi_down, chi2 and epsilon at params.delta_c."""
    dc = params.delta_c
    pole_tol = TWO_PI * 1e6
    denominators = (dc, dc + params.delta_2, dc + params.delta_1,
                    dc + params.delta_2 - params.omega_hf,
                    dc + params.delta_1 - params.omega_hf)
    for d in denominators:
        if abs(d) < pole_tol:
            raise SingularityError(
                "delta_c within 2pi x 1 MHz of an atomic resonance pole")
    g2 = g * g
    chi0 = g2 * (params.b3 / dc + params.b2 / (dc + params.delta_2)
                 + params.b1 / (dc + params.delta_1))
    chi_down = g2 * (
        params.b2_down / (dc + params.delta_2 - params.omega_hf)
        + params.b1_down / (dc + params.delta_1 - params.omega_hf))
    chi2 = g2 / dc
    epsilon = (chi_down / 2.0) / chi2
    return DispersiveShifts(chi0=chi0, chi_down=chi_down, chi2=chi2,
                            epsilon=epsilon)


def cooperativity(params: PhysicsParams, g: float) -> float:
    """Single-atom cooperativity C = 4 g^2 / (kappa Gamma).

    With the default coupling this evaluates to C ~ 1.4, i.e. NC ~ 1e3 for
    N ~ 700; reported as computed from the formula.
    """
    return 4.0 * g * g / (params.kappa * params.gamma)


def reflection_q(detuning: np.ndarray, kappa: float,
                 eta_c: float) -> np.ndarray:
    """Q quadrature of the reflected field, Im r(Delta), normalized."""
    detuning = np.asarray(detuning, dtype=float)
    return eta_c * kappa * detuning / (detuning ** 2 + 0.25 * kappa ** 2)


def synth_sweep(shift: float, params: PhysicsParams, photons: float,
                efficiency: float, rng: np.random.Generator,
                span: float | None = None, n_samples: int = 161,
                sweep_rate: float = TWO_PI * 1.5e6 / 1e-3) -> SweepTrace:
    """Synthesize one noisy homodyne sweep across the shifted resonance.

    The grid covers [-span/2, +span/2] around the empty-cavity resonance
    (default span 16 kappa); the lineshape sits at ``shift``. Every sample
    carries additive white Gaussian noise with variance 1 / (4 q M_i),
    the photon-shot-noise scaling for a homodyne record at detection
    efficiency q.

    Parameters
    ----------
    shift : float
        Dispersive resonance shift in rad/s.
    photons : float
        Incident photon number M_i over the whole sweep, > 0.
    efficiency : float
        Net quantum efficiency q in (0, 1]; swept-detection losses are
        already folded in by the caller's calibration.
    """
    if photons <= 0:
        raise ValueError("photons must be > 0")
    if not 0.0 < efficiency <= 1.0:
        raise ValueError("efficiency must be in (0, 1]")
    if span is None:
        span = 16.0 * params.kappa
    if n_samples < 8 or span / n_samples > params.kappa / 8.0:
        raise ValueError("grid too coarse: need >= 8 samples across kappa")
    grid = np.linspace(-0.5 * span, 0.5 * span, n_samples)
    clean = reflection_q(grid - shift, params.kappa, params.eta_c)
    sigma = 1.0 / (2.0 * math.sqrt(efficiency * photons))
    noisy = clean + sigma * rng.standard_normal(n_samples)
    return SweepTrace(detuning_grid=grid, q_quadrature=noisy,
                      sweep_rate=sweep_rate, photons_incident=photons,
                      kappa=params.kappa, eta_c=params.eta_c,
                      noise_sigma=sigma)


def fit_sweep(trace: SweepTrace) -> tuple[float, float]:
    """Least-squares center of the dispersive lineshape in a sweep.

    Model: q(Delta) = A kappa (Delta - c) / ((Delta - c)^2 + kappa^2/4) + y0
    with free (c, A, y0) and kappa fixed at the trace value. Deterministic
    initialization from the sample extrema. Returns (center, standard
    error of the center).

    Raises FitError (with the residual norm) when the optimizer does not
    converge, the fitted amplitude is indistinguishable from zero, or the
    fitted center lies outside the sweep window.
    """
    grid = np.asarray(trace.detuning_grid, dtype=float)
    vals = np.asarray(trace.q_quadrature, dtype=float)
    kappa = trace.kappa

    # the lineshape peaks at c + kappa/2 and dips at c - kappa/2
    c0 = 0.5 * (grid[np.argmax(vals)] + grid[np.argmin(vals)])
    a0 = max(0.5 * (vals.max() - vals.min()), 1e-6)
    y0 = float(np.median(vals))

    def model(p, x):
        c, a, off = p
        d = x - c
        return a * kappa * d / (d * d + 0.25 * kappa * kappa) + off

    def resid(p):
        return model(p, grid) - vals

    sol = least_squares(resid, x0=[c0, a0, y0], max_nfev=400)
    rnorm = float(np.linalg.norm(sol.fun))
    if not sol.success:
        raise FitError("sweep fit did not converge", residual_norm=rnorm)
    # covariance from the Jacobian at the solution
    jac = sol.jac
    dof = max(len(grid) - 3, 1)
    s2 = rnorm ** 2 / dof
    try:
        cov = s2 * np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError as exc:
        raise FitError("singular Jacobian in sweep fit",
                       residual_norm=rnorm) from exc
    center, amplitude = float(sol.x[0]), float(sol.x[1])
    center_se = float(math.sqrt(max(cov[0, 0], 0.0)))
    amp_se = float(math.sqrt(max(cov[1, 1], 0.0)))
    if abs(amplitude) < 3.0 * amp_se:
        raise FitError("no resolvable lineshape in sweep window",
                       residual_norm=rnorm)
    if not grid[0] <= center <= grid[-1]:
        raise FitError("fitted center outside the sweep window",
                       residual_norm=rnorm)
    return center, center_se
