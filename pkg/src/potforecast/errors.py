"""Exception and warning types raised across the package."""


class DegenerateDataError(ValueError):
    """The excesses carry no information about the GP parameters (e.g. all zero)."""


class SingularityError(ArithmeticError):
    """A closed-form estimator hit a division by zero."""


class NumericalError(RuntimeError):
    """A numerical routine did not reach its tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ChainDegeneracyError(NumericalError):
    """MCMC acceptance rate outside the usable band after adaptation."""


class ExperimentError(RuntimeError):
    """A simulation experiment could not produce a trustworthy result."""


class ValidityWarning(UserWarning):
    """An estimate was produced outside the region where its theory applies."""
