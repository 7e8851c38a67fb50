class ConfigurationError(ValueError):
    """Inconsistent or invalid case / grid configuration."""


class IngestionError(ValueError):
    """Malformed field file."""


class SaturationDomainError(ValueError):
    """Saturation outside the admissible range."""


class LinearSolveError(RuntimeError):
    """Singular or non-finite linear system in a Newton update."""


class StepFailure(RuntimeError):
    """A time step could not be converged; the caller should cut dt."""

    def __init__(self, message, passes=None):
        super().__init__(message)
        self.passes = passes or []


class SimulationAbort(RuntimeError):
    """Time-step cutting reached the minimum step without convergence."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
