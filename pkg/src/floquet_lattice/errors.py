"""Exception types shared across the package."""


class ValidationError(ValueError):
    """A system description or configuration violates a documented constraint."""


class IntegrationFailure(RuntimeError):
    """Norm drift exceeded the hard bound during time stepping.

    Carries the simulation time at which the bound was first violated,
    which usually means the step size is too coarse for the drive amplitude.
    """

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class NumericsError(RuntimeError):
    """A numerical quality gate failed (unitarity, eigensolver residual, ...)."""


class ScanInterrupted(RuntimeError):
    """A scan point failed; completed per-point records are preserved.

    ``completed`` maps already-finished grid indices to their records so a
    long scan does not lose work when one parameter point misbehaves.
    """

    def __init__(self, message: str, completed: dict):
        super().__init__(message)
        self.completed = completed
