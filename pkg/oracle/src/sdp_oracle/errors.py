class OracleError(Exception):
    """Base class for oracle failures."""


class ParseError(OracleError):
    pass


class ValidationError(OracleError):
    pass


class Infeasible(OracleError):
    pass


class SolverFailure(OracleError):
    pass


class IoError(OracleError):
    pass
