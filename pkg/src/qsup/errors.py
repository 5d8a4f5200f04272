"""Exception hierarchy.

Computation failures (no fringes, fit divergence, ...) and usage/IO failures
are kept apart so the command line can map them to distinct exit codes.
"""


class QsupError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ComputationError(QsupError):
    exit_code = 1


class UsageError(QsupError):
    exit_code = 2


class RangeError(ComputationError, ValueError):
    """A wavelength or length falls outside the valid range of a model."""


class DomainError(ComputationError, ValueError):
    """Inputs outside the mathematical domain of an operation."""


class EvanescentError(ComputationError, ValueError):
    """Transverse wavenumber exceeds a medium wavevector (no propagating wave)."""


class CoverageError(ComputationError, ValueError):
    """A tabulated spectrum does not cover the axis values it is asked for."""


class NoFringeError(ComputationError):
    """The fringe spectrum has no interior extrema, so visibility is undefined."""


class WindowError(ComputationError, ValueError):
    """A visibility window contains no points."""


class FitError(ComputationError):
    """Gaussian band fit failed to converge."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class SeedError(ComputationError, ValueError):
    """A peak seed lies outside the fit window."""


class ResampleError(ComputationError, ValueError):
    """Savitzky-Golay filtering needs a uniformly spaced axis."""


class DataError(ComputationError, ValueError):
    """Spectrum values violate a precondition (e.g. negative absorbance)."""


class SweepError(ComputationError):
    """Every point of a sweep failed for reasons other than missing fringes."""


class ParseError(UsageError, ValueError):
    """Malformed input file."""

    def __init__(self, message, line=None, path=None):
        loc = ""
        if path is not None:
            loc += f"{path}"
        if line is not None:
            loc += f":{line}" if loc else f"line {line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.line = line
        self.path = path


class ConfigError(UsageError, ValueError):
    """Invalid or incomplete configuration."""
