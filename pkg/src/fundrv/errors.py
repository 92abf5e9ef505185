"""Exception types shared across the package."""


class DomainError(ValueError):
    """Evaluation point lies outside the [0, 1] domain."""


class RankError(ValueError):
    """A matrix that must have full rank is rank deficient."""


class EstimabilityError(ValueError):
    """The requested design is not estimable (collinear impact columns)."""


class SingularSystemError(ValueError):
    """Penalized normal equations are singular at the requested lambda."""

    def __init__(self, message, suggested_lambda=None):
        super().__init__(message)
        self.suggested_lambda = suggested_lambda


class SingularContrastError(ValueError):
    """The contrast covariance C V C' is singular."""


class DegenerateRegressorError(ValueError):
    """A regressor in the second-stage t-test is (numerically) constant."""
