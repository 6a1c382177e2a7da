"""Physical constants for rubidium-87 on the D2 line.

Values are grouped here so the default PhysicsParams table and the tests
draw from a single source. All angular frequencies are rad/s.
"""

import math

TWO_PI = 2.0 * math.pi

HBAR = 1.054571817e-34          # J s
M_RB87 = 1.443160648e-25        # kg, atomic mass of Rb-87

WAVELENGTH_D2 = 780.0e-9        # m, probe / Raman wavelength
GAMMA_D2 = TWO_PI * 6.065e6     # rad/s, natural linewidth of 5P_3/2

OMEGA_HF = TWO_PI * 6.8347e9    # rad/s, ground hyperfine splitting
DELTA_2 = TWO_PI * 266.7e6      # rad/s, F'=3 to F'=2 excited splitting
DELTA_1 = TWO_PI * 423.6e6      # rad/s, F'=3 to F'=1 excited splitting

# Branching factors of the dispersive shift sums for probing F=2 -> F'
# (up sums) and the F=1 ground state (down sums).
BRANCH_B3 = 6.0 / 15.0
BRANCH_B2 = 3.0 / 12.0
BRANCH_B1 = 1.0 / 60.0
BRANCH_B2_DOWN = 3.0 / 12.0
BRANCH_B1_DOWN = 5.0 / 12.0

GRAVITY_PARALLEL = 9.796        # m/s^2, projection of g on the cavity axis


def recoil_frequency(wavelength: float = WAVELENGTH_D2,
                     mass: float = M_RB87) -> float:
    """Single-photon recoil frequency hbar k^2 / (2 m) in rad/s."""
    k = TWO_PI / wavelength
    return HBAR * k * k / (2.0 * mass)
