"""Mirror-vibration phase-noise budget for the Mach-Zehnder sequence.

In the zero-duration-pulse limit the interferometer maps an
acceleration spectrum S_a(omega) to a phase variance through
|T(omega)|^2 = 64 k^2 sin^4(omega T/2) / omega^4. The integral is done
panel-wise between the transfer-function zeros so the quartic
oscillation never outruns the quadrature nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cavity import PhysicsParams
from .constants import TWO_PI
from .errors import CoverageError, SimulationError

__all__ = [
    "PSDTable",
    "transfer_function",
    "integrate_phase_noise",
    "phase_noise_budget",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class PSDTable:
    """Acceleration power spectral density on a log-log grid.

    ``omega`` in rad/s (strictly increasing, > 0), ``values`` in
    (m/s^2)^2 per (rad/s). Evaluation interpolates linearly in log-log
    space; outside the tabulated range it either raises or, with
    ``extrapolate``, continues the end slopes.
    """

    omega: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        omega = np.asarray(self.omega, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if omega.ndim != 1 or omega.size < 2 or values.shape != omega.shape:
            raise ValueError("need matching 1-d omega/value arrays, >= 2 rows")
        if omega[0] <= 0.0 or np.any(np.diff(omega) <= 0.0):
            raise ValueError("omega must be strictly increasing and > 0")
        if np.any(values < 0.0) or not np.all(np.isfinite(values)):
            raise ValueError("PSD values must be finite and >= 0")
        omega.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_file(cls, path) -> "PSDTable":
        """Load a two-column text file: frequency [Hz], PSD [(m/s^2)^2/Hz]."""
        raw = np.loadtxt(path, ndmin=2)
        if raw.shape[1] < 2:
            raise ValueError("PSD file needs two columns: f_hz, psd")
        freq = raw[:, 0]
        order = np.argsort(freq)
        return cls(TWO_PI * freq[order], raw[order, 1] / TWO_PI)

    def covers(self, lo: float, hi: float) -> bool:
        return self.omega[0] <= lo and self.omega[-1] >= hi

    def evaluate(self, omega, extrapolate: bool = False) -> np.ndarray:
        """Log-log interpolated S_a at the given angular frequencies."""
        omega = np.asarray(omega, dtype=float)
        if np.any(omega <= 0.0):
            raise ValueError("omega must be > 0")
        if not extrapolate and (
            np.any(omega < self.omega[0] * (1.0 - 1e-12))
            or np.any(omega > self.omega[-1] * (1.0 + 1e-12))
        ):
            raise CoverageError("frequency outside the tabulated PSD range")
        # zeros are kept as an effective -inf in log space
        log_values = np.log(np.maximum(self.values, 1e-300))
        log_s = np.interp(np.log(omega), np.log(self.omega), log_values)
        if extrapolate:
            log_omega = np.log(self.omega)
            below = np.log(omega) < log_omega[0]
            above = np.log(omega) > log_omega[-1]
            if np.any(below):
                slope = (log_values[1] - log_values[0]) / (
                    log_omega[1] - log_omega[0]
                )
                log_s = np.where(
                    below,
                    log_values[0] + slope * (np.log(omega) - log_omega[0]),
                    log_s,
                )
            if np.any(above):
                slope = (log_values[-1] - log_values[-2]) / (
                    log_omega[-1] - log_omega[-2]
                )
                log_s = np.where(
                    above,
                    log_values[-1] + slope * (np.log(omega) - log_omega[-1]),
                    log_s,
                )
        out = np.exp(log_s)
        # collapse the log-space placeholder for exact-zero rows
        out = np.where(out < 1e-200, 0.0, out)
        return out if out.ndim else float(out)


def transfer_function(omega, t_evol: float, params: PhysicsParams):
    """|T(omega)|^2 mapping acceleration PSD to phase variance density.

    64 k^2 sin^4(omega T/2) / omega^4, with the analytic 4 k^2 T^4
    limit substituted where omega T is small enough to lose precision.
    """
    if t_evol < 0.0:
        raise ValueError("t_evol must be >= 0")
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0.0):
        raise ValueError("omega must be >= 0")
    k = params.wavenumber
    half = 0.5 * omega * t_evol
    small = half < 1e-5
    safe = np.where(small, 1.0, omega)
    general = 64.0 * k**2 * np.sin(half) ** 4 / safe**4
    # sin^4(x)/x^4 -> 1 - 2x^2/3 for small x
    limit = 4.0 * k**2 * t_evol**4 * (1.0 - 2.0 * half**2 / 3.0)
    out = np.where(small, limit, general)
    return out if out.ndim else float(out)


def _panel_edges(lo: float, hi: float, t_evol: float) -> np.ndarray:
    """Integration panel boundaries: log-spaced below the first
    transfer-function zero, half-period aligned above it."""
    first_zero = TWO_PI / t_evol
    edges = [lo]
    if lo < first_zero:
        top = min(hi, first_zero)
        n_log = max(8, int(math.ceil(4.0 * math.log10(top / lo))))
        edges.extend(np.geomspace(lo, top, n_log + 1)[1:])
    if hi > first_zero:
        half_period = math.pi / t_evol
        start = max(lo, first_zero)
        n_half = int(math.ceil((hi - start) / half_period))
        if n_half > 200000:
            raise SimulationError("PSD range too wide to integrate")
        edges.extend((start + half_period * np.arange(1, n_half + 1)).clip(max=hi))
    edges = np.unique(np.asarray(edges))
    return edges[edges <= hi * (1.0 + 1e-15)]


def _fixed_quadrature(integrand, edges: np.ndarray) -> float:
    lo, hi = edges[:-1], edges[1:]
    centers = 0.5 * (lo + hi)
    spans = 0.5 * (hi - lo)
    nodes = centers[:, None] + spans[:, None] * _GL_NODES[None, :]
    values = integrand(nodes.ravel()).reshape(nodes.shape)
    return float(np.sum(spans * (values @ _GL_WEIGHTS)))


def integrate_phase_noise(
    psd: PSDTable,
    t_evol: float,
    params: PhysicsParams,
    extrapolate: bool = False,
) -> float:
    """RMS interferometer phase from an acceleration PSD.

    Integrates |T|^2 S_a over the tabulated range (extended to the
    required [2 pi 0.1/T, 2 pi 100/T] window when ``extrapolate`` is
    set), refining the panel quadrature until successive estimates
    agree to 1e-4 relative.

    Raises
    ------
    CoverageError
        If the table does not cover the required window and
        extrapolation is disabled.
    """
    if t_evol < 0.0:
        raise ValueError("t_evol must be >= 0")
    if t_evol == 0.0:
        return 0.0
    needed_lo = TWO_PI * 0.1 / t_evol
    needed_hi = TWO_PI * 100.0 / t_evol
    if not psd.covers(needed_lo, needed_hi) and not extrapolate:
        raise CoverageError(
            "PSD table must cover "
            f"[{needed_lo:.3g}, {needed_hi:.3g}] rad/s for T = {t_evol} s; "
            "pass extrapolate=True to extend the end slopes"
        )
    lo = min(psd.omega[0], needed_lo) if extrapolate else psd.omega[0]
    hi = max(psd.omega[-1], needed_hi) if extrapolate else psd.omega[-1]

    def integrand(omega):
        return transfer_function(omega, t_evol, params) * psd.evaluate(
            omega, extrapolate=extrapolate
        )

    edges = _panel_edges(lo, hi, t_evol)
    estimate = _fixed_quadrature(integrand, edges)
    for _ in range(4):
        split = np.sort(np.concatenate([edges, 0.5 * (edges[:-1] + edges[1:])]))
        refined = _fixed_quadrature(integrand, split)
        if abs(refined - estimate) <= 1e-4 * max(abs(refined), 1e-300):
            return math.sqrt(max(refined, 0.0))
        edges, estimate = split, refined
    raise SimulationError("phase-noise quadrature did not converge")


def phase_noise_budget(
    psd: PSDTable,
    t_evol: float,
    n_atoms: int,
    params: PhysicsParams | None = None,
    extrapolate: bool = False,
) -> dict:
    """Compare vibration phase noise to the projection-noise limit.

    Returns phi_rms, the shot-noise phase resolution 1/sqrt(N), and
    their ratio in dB (negative when vibrations sit below the SQL).
    """
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    params = params or PhysicsParams()
    phi = integrate_phase_noise(psd, t_evol, params, extrapolate=extrapolate)
    sql = 1.0 / math.sqrt(n_atoms)
    ratio_db = -math.inf if phi == 0.0 else 20.0 * math.log10(phi / sql)
    return {
        "phi_rms_rad": phi,
        "delta_theta_sql_rad": sql,
        "ratio_db": ratio_db,
        "t_evol_s": t_evol,
        "n_atoms": n_atoms,
    }
