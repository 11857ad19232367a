"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line front end:
1 for usage/config problems, 2 for bad or insufficient data, 3 when the
computation itself degenerates (e.g. a monofractal series has no hierarchy
parameter to estimate).
"""


class SLHierarchyError(Exception):
    exit_code = 2


# -- configuration ---------------------------------------------------------

class ConfigError(SLHierarchyError):
    exit_code = 1

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class SpecInvalid(ConfigError):
    pass


class InvalidH(SpecInvalid):
    pass


class LengthUnsupported(SpecInvalid):
    pass


# -- data ------------------------------------------------------------------

class DataError(SLHierarchyError):
    exit_code = 2


class ParseError(DataError):
    def __init__(self, row, reason):
        self.row = row
        self.reason = reason
        super().__init__(f"row {row}: {reason}")


class TooShort(DataError):
    pass


class TauOutOfRange(DataError):
    pass


class EmptySeries(DataError):
    pass


class GridTooLarge(DataError):
    pass


class GridMismatch(DataError):
    pass


class NonpositiveMoment(DataError):
    def __init__(self, p, tau):
        self.p = p
        self.tau = tau
        super().__init__(f"moment X_{p:g}({tau}) is not strictly positive; "
                         "the p-grid reaches too far for this data")


# -- computation degeneracies ---------------------------------------------

class DegeneracyError(SLHierarchyError):
    exit_code = 3


class DegenerateRange(DegeneracyError):
    pass


class DegenerateDenominator(DegeneracyError):
    pass


class InsufficientPoints(DegeneracyError):
    pass


class DegenerateSlope(DegeneracyError):
    pass


class MonofractalDegenerate(DegenerateRange):
    """Raised when the data show no measurable departure from monofractal
    scaling, so beta collapses to its boundary value 1."""

    def __init__(self, message, beta_estimate=None, xi_fit=None):
        self.beta_estimate = beta_estimate
        self.xi_fit = xi_fit
        super().__init__(message)


class BetaOutOfRange(DegeneracyError):
    pass


class AllPairsDegenerate(DegeneracyError):
    pass


class StageError(SLHierarchyError):
    """Wraps a pipeline failure with the name of the stage that raised it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 2)
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
