"""Exception hierarchy shared by all modules.

Each error carries an ``exit_code`` used by the command line front end.
"""


class LoschmidtError(Exception):
    exit_code = 5


class ConfigError(LoschmidtError, ValueError):
    """Malformed or inconsistent run configuration."""

    exit_code = 2

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class InvalidSpecError(LoschmidtError, ValueError):
    exit_code = 2


class InvalidMomentumError(InvalidSpecError):
    pass


class InvalidOrderError(InvalidSpecError):
    pass


class DegeneracyError(LoschmidtError):
    """Ground state is (numerically) degenerate or unsupported."""

    exit_code = 3


class ResourceLimitError(LoschmidtError):
    exit_code = 4


class NumericError(LoschmidtError, ArithmeticError):
    exit_code = 5


class SingularModeError(NumericError):
    """A mode energy vanishes so its Bogoliubov angle is undefined."""


class SingularPairError(NumericError):
    """Two mode energies sum to zero, leaving a vanishing denominator."""


class PoleError(NumericError):
    """Evaluation requested on a real propagator pole."""


class ResolventSingularError(NumericError):
    pass


class FitError(NumericError):
    pass


class GeometryError(NumericError):
    """A contour would cross or enclose an unintended pole."""
