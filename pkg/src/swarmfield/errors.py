"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SwarmfieldError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SwarmfieldError, ValueError):
    """Invalid parameters or scenario description."""


class DegenerateDensityError(SwarmfieldError, ValueError):
    """A density cannot be normalized (zero or negative total mass)."""


class InputError(SwarmfieldError, ValueError):
    """Malformed series or mismatched operands."""


class SolverDiagnosticError(SwarmfieldError, RuntimeError):
    """Numerical breakdown (NaN, blow-up) inside a time integrator.

    ``step`` records where the failure was detected, when known.
    """

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class ConfigParseError(ConfigurationError):
    """Config document rejected; carries the offending key and source line."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.key = key
        self.line = line
