"""Exception hierarchy shared by every module of the package."""


class MSTError(Exception):
    """Base class for all errors raised by mstground."""


class DomainError(MSTError, ValueError):
    """Argument outside the domain of a special function."""


class ConfigurationError(MSTError, ValueError):
    """Invalid geometry, material or simulation parameters.

    ``problems`` holds every violated invariant as ``(field_path, message)``.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [("", problems)]
        self.problems = list(problems)
        lines = [f"{path}: {msg}" if path else msg for path, msg in self.problems]
        super().__init__("; ".join(lines))


class GeometryError(MSTError, ValueError):
    """Degenerate geometry: coincident points, points inside scatterers."""


class ConvergenceError(MSTError, ValueError):
    """A series expansion was requested outside its region of validity."""


class SingularSystemError(MSTError, ArithmeticError):
    """The assembled linear system is singular or too ill-conditioned."""

    def __init__(self, message, frequency=None, condition=None):
        self.frequency = frequency
        self.condition = condition
        super().__init__(message)


class ExtrapolationError(MSTError, ValueError):
    """Tabulated data queried outside its range."""
