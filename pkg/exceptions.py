"""
Error types raised by the laboratory modules.
Each subclass also derives from the closest builtin so callers may catch either.
"""


class LabError(Exception):
    """Base class for all laboratory errors."""


class LatticeError(LabError, ValueError):
    """Index outside the lattice or fields defined on different lattices."""


class PaddingError(LabError, ValueError):
    """Product chain does not fit the padded grid."""

    def __init__(self, message, required_pad_factor):
        super().__init__(message)
        self.required_pad_factor = required_pad_factor


class CutoffError(LabError, ValueError):
    """Cutoff parameter outside its admissible range."""


class ContractionError(LabError, ArithmeticError):
    """Neumann series for the inverse change of variables would not converge."""

    def __init__(self, message, factor):
        super().__init__(message)
        self.factor = factor


class AdmissibilityError(LabError, ValueError):
    """Initial data violates a smallness condition."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


class ConfigError(LabError, ValueError):
    """Malformed or inconsistent experiment configuration."""


class UnknownInequalityError(LabError, KeyError):
    """Requested inequality id is not registered."""


class TelemetryError(LabError, KeyError):
    """Trajectory lacks a telemetry column needed by a certificate."""
