"""Collective pseudospin states on the symmetric Dicke manifold.

N identical two-level atoms restricted to the permutation-symmetric
subspace form a single spin J = N/2. States are stored as complex
amplitude vectors over the Dicke basis |J, m>, m = -J .. J, indexed by
k = m + J (so k equals the spin-up population N_up when the state is
measured). The angular momentum operators act tridiagonally:

    Jz |m> = m |m>
    J+ |m> = sqrt(J(J+1) - m(m+1)) |m+1>
    J- |m> = sqrt(J(J+1) - m(m-1)) |m-1>

Rotations about equatorial axes are computed from a cached eigendecomposition
of the real tridiagonal Jx matrix; rotations about z are diagonal phases.
Exact pi rotations use the closed-form Dicke-basis flip instead of the
matrix path. All operations are pure: they return new states and take any
randomness as an explicit numpy Generator.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

__all__ = [
    "CollectiveSpinState",
    "SpinProjectionAxis",
    "new_css",
    "rotate",
    "expect",
    "covariance_yz",
    "sample_jz",
    "husimi_q",
    "overlap",
]


@dataclass(frozen=True)
class SpinProjectionAxis:
    """A measurement / rotation axis: x, y, z, or any equatorial azimuth.

    kind is one of "x", "y", "z", "equatorial"; azimuth (rad, wrapped to
    [0, 2pi)) is meaningful for equatorial axes, with x = equatorial(0)
    and y = equatorial(pi/2).
    """

    kind: str
    azimuth: float = 0.0

    _KINDS = ("x", "y", "z", "equatorial")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"axis kind must be one of {self._KINDS}")
        az = self.azimuth
        if self.kind == "x":
            az = 0.0
        elif self.kind == "y":
            az = 0.5 * math.pi
        if not math.isfinite(az):
            raise ValueError("azimuth must be finite")
        object.__setattr__(self, "azimuth", az % (2.0 * math.pi))

    @classmethod
    def x(cls) -> "SpinProjectionAxis":
        return cls("x")

    @classmethod
    def y(cls) -> "SpinProjectionAxis":
        return cls("y")

    @classmethod
    def z(cls) -> "SpinProjectionAxis":
        return cls("z")

    @classmethod
    def equatorial(cls, azimuth: float) -> "SpinProjectionAxis":
        return cls("equatorial", azimuth)

    @property
    def is_z(self) -> bool:
        return self.kind == "z"


@dataclass(frozen=True)
class CollectiveSpinState:
    """Normalized amplitudes over |J, m>, J = n_atoms/2.

    amplitudes[k] multiplies |J, m = k - J>; length is n_atoms + 1.
    """

    n_atoms: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError("n_atoms must be >= 1")
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (self.n_atoms + 1,):
            raise ValueError(
                f"amplitudes must have length n_atoms+1 = {self.n_atoms + 1}")
        norm = math.sqrt(float(np.sum(np.abs(amp) ** 2)))
        if not math.isfinite(norm) or norm == 0.0:
            raise ValueError("amplitudes must be normalizable")
        object.__setattr__(self, "amplitudes", amp / norm)
        self.amplitudes.setflags(write=False)

    @property
    def j(self) -> float:
        return 0.5 * self.n_atoms

    @property
    def two_m(self) -> np.ndarray:
        """Integer 2m values, -N .. N step 2 (half-integer-safe index)."""
        return np.arange(-self.n_atoms, self.n_atoms + 1, 2)

    @property
    def m_values(self) -> np.ndarray:
        return 0.5 * self.two_m

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        return p / p.sum()


# ---------------------------------------------------------------------------
# cached Jx eigendecomposition, one entry per n_atoms

_ROTATION_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}
_CACHE_LIMIT = 8  # each entry at N~1000 holds an (N+1)^2 float64 matrix


def _ladder_offdiag(n_atoms: int) -> np.ndarray:
    """Off-diagonal of Jx: <m+1| Jx |m> = 0.5 sqrt(J(J+1) - m(m+1))."""
    j = 0.5 * n_atoms
    m = np.arange(-j, j, 1.0)
    return 0.5 * np.sqrt(j * (j + 1.0) - m * (m + 1.0))


def _jx_eigensystem(n_atoms: int) -> tuple[np.ndarray, np.ndarray]:
    cached = _ROTATION_CACHE.get(n_atoms)
    if cached is None:
        lam, vec = eigh_tridiagonal(
            np.zeros(n_atoms + 1), _ladder_offdiag(n_atoms))
        if len(_ROTATION_CACHE) >= _CACHE_LIMIT:
            _ROTATION_CACHE.pop(next(iter(_ROTATION_CACHE)))
        cached = (lam, vec)
        _ROTATION_CACHE[n_atoms] = cached
    return cached


def _apply_real_matrix(mat: np.ndarray, psi: np.ndarray,
                       transpose: bool = False) -> np.ndarray:
    # real matrix on complex vector as one (n, 2) gemm; avoids promoting
    # the cached eigenvector matrix to complex
    stacked = np.column_stack((psi.real, psi.imag))
    out = (mat.T if transpose else mat) @ stacked
    return out[:, 0] + 1j * out[:, 1]


# ---------------------------------------------------------------------------
# constructors and operations

def new_css(n_atoms: int, polar: float, azimuth: float) -> CollectiveSpinState:
    """Coherent spin state with Bloch vector at (polar, azimuth).

    Equivalent to exp(-i azimuth Jz) exp(-i polar Jy) |J, J>, i.e.

        c_m = sqrt(C(N, J+m)) cos^(J+m)(polar/2) sin^(J-m)(polar/2)
              * exp(-i m azimuth)

    Amplitudes are formed in log space so large N does not overflow the
    binomial coefficients.

    Parameters
    ----------
    n_atoms : int
        Number of atoms N >= 1; the state lives on N+1 Dicke levels.
    polar, azimuth : float
        Bloch angles in rad; polar = 0 is all atoms spin-up (+z).
    """
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    if not (math.isfinite(polar) and math.isfinite(azimuth)):
        raise ValueError("angles must be finite")
    n = n_atoms
    k = np.arange(n + 1)                      # k = J + m
    c = abs(math.cos(0.5 * polar))
    s = abs(math.sin(0.5 * polar))
    # signs of cos/sin(polar/2) for polar outside [0, pi]
    sign_c = 1.0 if math.cos(0.5 * polar) >= 0 else -1.0
    sign_s = 1.0 if math.sin(0.5 * polar) >= 0 else -1.0

    log_binom = 0.5 * (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))
    # -1e300 stands in for log(0): k * (-1e300) underflows cleanly to -inf
    # while 0 * (-1e300) stays 0, avoiding the 0 * inf indeterminate
    log_c = math.log(c) if c > 0 else -1e300
    log_s = math.log(s) if s > 0 else -1e300
    expo = log_binom + k * log_c + (n - k) * log_s
    mag = np.exp(expo - expo.max())
    signs = sign_c ** k * sign_s ** (n - k)
    m = k - 0.5 * n
    amp = mag * signs * np.exp(-1j * m * azimuth)
    return CollectiveSpinState(n, amp)


def _rotate_z(state: CollectiveSpinState, angle: float) -> CollectiveSpinState:
    phases = np.exp(-1j * angle * state.m_values)
    return CollectiveSpinState(state.n_atoms, state.amplitudes * phases)


def _flip_pi_equatorial(state: CollectiveSpinState,
                        azimuth: float) -> CollectiveSpinState:
    # exp(-i pi J_phi) |m> -> (-1)^(J-m) exp(i(2 phi - pi) m) |-m>, derived
    # from exp(-i pi Jy)|J,m> = (-1)^(J-m) |J,-m> conjugated by z rotations
    n = state.n_atoms
    m = state.m_values
    sign = np.where((np.arange(n, -1, -1)) % 2 == 0, 1.0, -1.0)  # (-1)^(N-k)
    phase = np.exp(1j * (2.0 * azimuth - math.pi) * m)
    amp = (sign * phase * state.amplitudes)[::-1]
    return CollectiveSpinState(n, amp)


def rotate(state: CollectiveSpinState, angle: float,
           axis: SpinProjectionAxis) -> CollectiveSpinState:
    """Apply exp(-i angle J_axis) to the state.

    z rotations are diagonal phase multiplications; equatorial rotations
    use the cached Jx eigendecomposition sandwiched between z phases, with
    an exact closed-form path for angle == +-pi.
    """
    if not math.isfinite(angle):
        raise ValueError("rotation angle must be finite")
    if angle == 0.0:
        return state
    if axis.is_z:
        return _rotate_z(state, angle)
    phi = axis.azimuth
    if abs(angle) == math.pi:
        out = _flip_pi_equatorial(state, phi)
        if angle < 0:
            # exp(+i pi J) = exp(-i pi J) * exp(2 pi i J); for half-integer J
            # the two directions differ by a global sign
            if state.n_atoms % 2 == 1:
                out = CollectiveSpinState(out.n_atoms, -out.amplitudes)
        return out
    lam, vec = _jx_eigensystem(state.n_atoms)
    m = state.m_values
    psi = state.amplitudes
    if phi != 0.0:
        psi = psi * np.exp(1j * phi * m)      # exp(+i phi Jz)
    work = _apply_real_matrix(vec, psi, transpose=True)
    work = work * np.exp(-1j * angle * lam)
    work = _apply_real_matrix(vec, work)
    if phi != 0.0:
        work = work * np.exp(-1j * phi * m)   # exp(-i phi Jz)
    return CollectiveSpinState(state.n_atoms, work)


def _apply_axis_operator(state: CollectiveSpinState,
                         axis: SpinProjectionAxis) -> np.ndarray:
    """Return J_axis |psi> as a raw vector."""
    m = state.m_values
    psi = state.amplitudes
    if axis.is_z:
        return m * psi
    # J_phi = 0.5 (e^{-i phi} J+ + e^{+i phi} J-)
    a = _ladder_offdiag(state.n_atoms) * 2.0  # <m+1|J+|m>
    phi = axis.azimuth
    out = np.zeros_like(psi)
    out[1:] += 0.5 * np.exp(-1j * phi) * a * psi[:-1]
    out[:-1] += 0.5 * np.exp(1j * phi) * a * psi[1:]
    return out


def expect(state: CollectiveSpinState,
           axis: SpinProjectionAxis) -> tuple[float, float]:
    """Exact (<J_axis>, Var(J_axis)) from tridiagonal matrix elements."""
    y = _apply_axis_operator(state, axis)
    mean = float(np.real(np.vdot(state.amplitudes, y)))
    second = float(np.real(np.vdot(y, y)))
    return mean, max(second - mean * mean, 0.0)


def covariance_yz(state: CollectiveSpinState) -> tuple[float, float, float]:
    """Symmetrized covariance block (Var Jy, Var Jz, Cov(Jy, Jz)).

    Cov uses the symmetric product (JyJz + JzJy)/2, which is the real part
    of <Jy psi | Jz psi> minus the product of means.
    """
    y = _apply_axis_operator(state, SpinProjectionAxis.y())
    z = state.m_values * state.amplitudes
    mean_y = float(np.real(np.vdot(state.amplitudes, y)))
    mean_z = float(np.real(np.vdot(state.amplitudes, z)))
    var_y = float(np.real(np.vdot(y, y))) - mean_y ** 2
    var_z = float(np.real(np.vdot(z, z))) - mean_z ** 2
    cov = float(np.real(np.vdot(y, z))) - mean_y * mean_z
    return max(var_y, 0.0), max(var_z, 0.0), cov


def sample_jz(state: CollectiveSpinState, rng: np.random.Generator) -> float:
    """Draw one projective Jz outcome m with probability |c_m|^2.

    The state is not mutated; the caller decides whether to collapse.
    Returns m on the half-integer grid (exact float).
    """
    k = int(rng.choice(state.n_atoms + 1, p=state.probabilities()))
    return k - 0.5 * state.n_atoms


def overlap(a: CollectiveSpinState, b: CollectiveSpinState) -> complex:
    """<a|b> for states of equal atom number."""
    if a.n_atoms != b.n_atoms:
        raise ValueError("states must share n_atoms")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def _css_magnitudes(n_atoms: int, polar: float) -> np.ndarray:
    """|c_k| of a CSS at the given polar angle (azimuth stripped)."""
    return np.abs(new_css(n_atoms, polar, 0.0).amplitudes)


def husimi_q(state: CollectiveSpinState, polar_grid: np.ndarray,
             azimuth_grid: np.ndarray) -> np.ndarray:
    """Husimi quasi-probability Q(theta, phi) = |<CSS(theta, phi)|psi>|^2.

    Returns a (len(polar_grid), len(azimuth_grid)) array with entries in
    [0, 1]. Normalization: integrating Q against (N+1)/(4 pi) dOmega
    gives 1 by the coherent-state resolution of identity.
    """
    polar_grid = np.atleast_1d(np.asarray(polar_grid, dtype=float))
    azimuth_grid = np.atleast_1d(np.asarray(azimuth_grid, dtype=float))
    if polar_grid.size == 0 or azimuth_grid.size == 0:
        raise ValueError("grids must be non-empty")
    m = state.m_values
    # <CSS(theta, phi)| psi> = sum_k b_k(theta) e^{+i m phi} psi_k
    phase_matrix = np.exp(1j * np.outer(azimuth_grid, m))
    q = np.empty((polar_grid.size, azimuth_grid.size))
    for i, theta in enumerate(polar_grid):
        w = _css_magnitudes(state.n_atoms, theta) * state.amplitudes
        q[i] = np.abs(phase_matrix @ w) ** 2
    return np.clip(q, 0.0, 1.0)
