"""Exception types raised across spintomo.

Every error derives from SpinTomoError so the CLI can map the whole family
to exit codes in one place.
"""


class SpinTomoError(Exception):
    """Base class for all spintomo errors."""

    exit_code = 1


class ConfigError(SpinTomoError, ValueError):
    """Invalid run configuration, unknown case label or out-of-range parameter."""

    exit_code = 2


class TomogramDataError(SpinTomoError, ValueError):
    """Malformed, unnormalized, inconsistent or incomplete tomogram data."""

    exit_code = 2


class NotHermitianError(SpinTomoError, ValueError):
    """Raised when an operator expected to be Hermitian is not."""

    exit_code = 2

    def __init__(self, asymmetry: float):
        self.asymmetry = asymmetry
        super().__init__(f"matrix is not Hermitian (||H - H^dagger||_F = {asymmetry:.3e})")


class CrossCheckError(SpinTomoError, RuntimeError):
    """Two independent numeric routes disagree beyond tolerance."""

    exit_code = 3
