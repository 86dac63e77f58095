"""Exception and warning types shared across the toolkit."""


class FieldDomainError(ValueError):
    """Radius or momentum outside the domain where the field is defined."""


class BelowPotentialRangeError(FieldDomainError):
    """The equation a(r) = k has no solution in the represented range."""


class InsufficientTableError(ValueError):
    """Tabulated field has too few samples for the requested derivative."""


class FormulaUnavailableError(ValueError):
    """The requested closed-form estimator is not defined for this field/m."""


class NormalizationError(ValueError):
    """An eigenfunction failed its normalization precondition."""


class PhaseResolutionError(ValueError):
    """Momentum grid too coarse to resolve the oscillatory phase.

    Carries ``required_spacing``, the largest admissible momentum step.
    """

    def __init__(self, message, required_spacing):
        super().__init__(message)
        self.required_spacing = required_spacing


class EigensolverError(RuntimeError):
    """Inverse iteration failed to reach the residual target."""


class GridCapWarning(UserWarning):
    """A recommended grid exceeded the node cap and was clamped."""
