"""Exception hierarchy shared across the solver modules."""


class NrdfError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(NrdfError):
    pass


class ValidationError(NrdfError):
    """Invalid model or configuration data.

    ``field`` names the offending entry; callers that know the enclosing
    structure may prefix it with a path (e.g. ``model.Sigma_w``).
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ParseError(NrdfError):
    pass


class SingularInnovation(NrdfError):
    """Innovation covariance is not invertible; the observation model is ill posed."""


class NotDetectable(NrdfError):
    pass


class NotStabilizable(NrdfError):
    pass


class NoConvergence(NrdfError):
    pass


class BudgetInfeasible(NrdfError):
    """Requested distortion does not exceed the estimation floor."""


class BracketFailure(NrdfError):
    """Multiplier bounds failed to bracket the root after expansion."""


class InfeasibleStage(NrdfError):
    """Some per-stage distortion does not exceed that stage's floor."""


class StructureNotSatisfied(NrdfError):
    """Inputs lack the commuting structure required by the eigenvalue solver.

    General multivariate instances should be routed to the SDP oracle.
    """


class SingularA(NrdfError):
    pass


class SingularPosterior(NrdfError):
    pass


class ScalingNotPSD(NrdfError):
    """Test-channel scalings came out indefinite; the covariance pair is invalid."""


class ZeroMatrix(NrdfError):
    pass


class HashMismatch(NrdfError):
    pass


class MissingRows(NrdfError):
    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__(f"oracle result lacks rows for D = {self.missing}")
