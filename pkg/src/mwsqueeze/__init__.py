"""Seedable simulator and analysis pipeline for cavity-aided squeezed
matter-wave interferometry.

Core layers:

- ``spins``      exact collective pseudospin states (Dicke basis)
- ``cavity``     dispersive cavity model and sweep synthesis / fitting
- ``dynamics``   one-axis twisting, QND measurement, decoherence ledgers
- ``kinematics`` axial momentum bookkeeping (Raman / Bragg pulses)
- ``vibration``  mirror-vibration phase-noise budget
- ``analysis``   fringe fits, theta estimators, Wineland parameter
- ``harness``    scenario execution, records, scans
- ``service``    FastAPI wrapper; ``cli`` is a thin client over it
"""

__version__ = "0.1.0"
