"""Exception hierarchy shared across the package."""


class RemmpcError(Exception):
    """Base class for all errors raised by remmpc."""


class LinAlgError(RemmpcError):
    pass


class SingularMatrix(LinAlgError):
    pass


class NotSymmetric(LinAlgError):
    pass


class NoConvergence(RemmpcError):
    pass


class DimensionMismatch(RemmpcError, ValueError):
    pass


class EmptyBox(RemmpcError, ValueError):
    pass


class RankDeficient(LinAlgError):
    pass


class SingularWeight(LinAlgError):
    pass


class SingularKkt(LinAlgError):
    pass


class SingularO(LinAlgError):
    """The stacked matrix B1 Q^-1 B1' + B2 R^-1 B2' is not invertible."""


class NotPd(LinAlgError):
    """An updated terminal weight failed the positive-definiteness test."""


class AssumptionViolated(RemmpcError):
    """Controllability or detectability does not hold for the given data."""


class CertificationFailed(RemmpcError):
    def __init__(self, message, instance=None):
        super().__init__(message)
        self.instance = instance


class QpInfeasible(RemmpcError):
    pass


class QpIterationLimit(RemmpcError):
    pass


class StepFailed(RemmpcError):
    """A closed-loop run aborted; carries the step index and partial run."""

    def __init__(self, step, cause, partial=None):
        super().__init__(f"step {step}: {cause}")
        self.step = step
        self.cause = cause
        self.partial = partial


class LengthMismatch(RemmpcError, ValueError):
    pass


class ScenarioError(RemmpcError, ValueError):
    pass
