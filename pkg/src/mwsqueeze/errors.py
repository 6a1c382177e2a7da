"""Exception taxonomy shared across the package.

Errors are split by how the CLI reports them: configuration problems exit
with code 2, runtime and fit failures with code 3.
"""


class MwsqueezeError(Exception):
    """Base class for all package errors."""


class ConfigError(MwsqueezeError):
    """Invalid configuration document, preset name, or parameter path."""


class SimulationError(MwsqueezeError):
    """Runtime failure while executing a scenario."""


class FitError(MwsqueezeError):
    """A least-squares fit failed or is degenerate.

    Carries diagnostics so callers can report what went wrong.
    """

    def __init__(self, message: str, residual_norm: float | None = None):
        super().__init__(message)
        self.residual_norm = residual_norm


class MissingOutcomeError(MwsqueezeError):
    """A record lacks an outcome field required by the requested estimator."""

    def __init__(self, field: str):
        super().__init__(f"record is missing required outcome field '{field}'")
        self.field = field


class SingularityError(MwsqueezeError):
    """Dispersive-shift evaluation too close to an atomic resonance pole."""


class CoverageError(MwsqueezeError):
    """A PSD table does not cover the frequency band required by the integral."""
