"""Exception types shared across the package."""


class CollideqError(Exception):
    """Base class for all package-specific errors."""


class InvalidSubsystem(CollideqError):
    """A subsystem label is unknown or repeated for the given register."""


class DimensionMismatch(CollideqError):
    """Operator or state dimensions are incompatible."""


class NotHermitian(CollideqError):
    """A matrix required to be Hermitian is not, beyond tolerance."""


class NotDiagonal(CollideqError):
    """A state required to be diagonal in the energy basis is not."""


class InvalidParameter(CollideqError):
    """A physical parameter is outside its admissible range."""


class NonUniqueSteadyState(CollideqError):
    """The one-step channel has a degenerate peripheral spectrum.

    Carries the number of eigenvalues found on (or numerically at) the
    unit circle in ``multiplicity``.
    """

    def __init__(self, multiplicity: int):
        self.multiplicity = multiplicity
        super().__init__(
            f"channel has {multiplicity} eigenvalues of unit modulus; "
            "fixed point is not unique"
        )


class IntegrationUnstable(CollideqError):
    """Trace drift of the master-equation integrator exceeded its bound."""


class NumericalPositivityError(CollideqError):
    """Born probabilities fell outside [0, 1] beyond numerical tolerance."""
