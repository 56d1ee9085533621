"""Exception types shared across the package."""


class IerkError(Exception):
    """Base class for all package-specific errors."""


class InvalidTableau(IerkError):
    """A coefficient tableau violates a structural requirement."""


class UnknownMethod(IerkError):
    """Requested method id is not in the registry."""


class DegenerateParameters(IerkError):
    """Parameter values make the method's closed-form coefficients blow up."""


class NonInvertibleStage(IerkError):
    """A stage solve (I - tau*a_ii*M*L_kappa) is singular on some Fourier mode."""


class IntegrationDiverged(IerkError):
    """Time integration produced non-finite values.

    Carries the completed step count and, when available, the energy trace
    accumulated before the blow-up.
    """

    def __init__(self, message, steps_completed=0, trace=None):
        super().__init__(message)
        self.steps_completed = steps_completed
        self.trace = trace
