"""Exception hierarchy shared by every stage of the embedding pipeline."""


class LatticeError(Exception):
    """Base class for all errors raised by latticejl."""


class DimensionMismatch(LatticeError, ValueError):
    pass


class DuplicatePoint(LatticeError, ValueError):
    pass


class BoundViolation(LatticeError, ValueError):
    pass


class EpsilonOutOfRange(LatticeError, ValueError):
    pass


class MembershipViolation(LatticeError, ValueError):
    pass


class SchemaError(LatticeError, ValueError):
    pass


class InfeasibleInstance(LatticeError, ValueError):
    pass


class ProjectionNotFound(LatticeError, RuntimeError):
    pass


class RotationNotFound(LatticeError, RuntimeError):
    """No block rotation met the target; ``best`` holds the closest witness."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class InjectivityViolation(LatticeError, RuntimeError):
    pass


class DuplicateOutput(LatticeError, RuntimeError):
    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class CertificationFailed(LatticeError, RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class LambdaSearchExhausted(LatticeError, RuntimeError):
    pass
