"""Exception hierarchy.

Verification failures are never raised; they are report content. Exceptions
are reserved for malformed input and for constructions that cannot complete.
"""


class BallBasisError(Exception):
    pass


class StructuralError(BallBasisError, ValueError):
    """Malformed space, set, basis or operator data."""


class ParameterError(BallBasisError, ValueError):
    pass


class DomainError(BallBasisError, ValueError):
    pass


class ResourceError(BallBasisError, ValueError):
    """Requested object exceeds the desk-scale guardrails."""


class PreconditionError(BallBasisError, ValueError):
    pass


class DegenerateWeightError(BallBasisError, ValueError):
    pass


class AlgorithmFailure(BallBasisError, RuntimeError):
    """A construction could not establish its postconditions.

    ``partial`` carries whatever was built before the failure.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
