"""Exception hierarchy shared across the package."""


class PricingError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(PricingError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RegimeError(PricingError):
    """An approximation formula was requested outside its moneyness regime."""


class StripError(DomainError):
    """A characteristic-function argument leaves the admissible analyticity strip."""


class QuadratureError(PricingError):
    """Numerical integration did not reach the requested tolerance.

    Carries the tolerance actually achieved in ``achieved``.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class OracleDisagreementError(PricingError):
    """Two independent reference pricers disagree beyond their combined tolerance."""


class DegenerateFitError(PricingError):
    """A convergence fit would be dominated by reference-pricer noise."""


class UnsupportedMeasureError(PricingError):
    """The requested operation has no implementation for this jump-measure family."""
