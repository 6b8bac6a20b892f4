"""Exception types shared across the package."""


class LabError(Exception):
    """Base class for all library errors."""


class DomainError(LabError, ValueError):
    """Input outside the mathematical domain of an operation."""


class ConditioningError(LabError, ValueError):
    """Geometry too degenerate to be handled in double precision."""


class BudgetError(LabError, RuntimeError):
    """An enumeration ran out of its node budget; ``partial`` keeps the best
    result found so far."""

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


class MeshError(LabError, RuntimeError):
    """Mesh construction or validation failure."""


class AssemblyError(LabError, RuntimeError):
    """Bad element encountered during assembly."""


class ConvergenceError(LabError, RuntimeError):
    """Eigensolver did not converge; carries the best iterate."""

    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


class ConfigError(LabError, ValueError):
    """Experiment configuration failed validation."""
