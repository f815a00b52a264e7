"""Exception types raised across the package."""


class GnqaError(Exception):
    """Base class for all package errors."""


class DeskLimitExceeded(GnqaError):
    """Raised when a 2**n object would exceed the configured desk limit."""

    def __init__(self, n, limit):
        super().__init__(f"n={n} exceeds the desk limit of {limit} "
                         "(set GNQA_DESK_LIMIT to override)")
        self.n = n
        self.limit = limit


class DimensionMismatch(GnqaError, ValueError):
    pass


class UnresolvedParameter(GnqaError):
    """A rotation angle sits on the rounding threshold (cos 2θ ≈ 0)."""

    def __init__(self, indices):
        super().__init__(f"parameters {list(indices)} are unresolved (cos 2θ ≈ 0)")
        self.indices = list(indices)


class KrylovBreakdown(GnqaError):
    def __init__(self, message, iterations=0):
        super().__init__(message)
        self.iterations = iterations


class SingularJacobian(GnqaError):
    pass


class RhoNotBelowLambda0(GnqaError, ValueError):
    pass


class SpectrumOutOfRange(GnqaError, ValueError):
    pass


class ZeroImage(GnqaError):
    """f(H) annihilates the state, so R_f is undefined."""


class OverlapNonpositive(GnqaError):
    """<φ|ζ> <= 0: the variable step size would flip sign."""

    def __init__(self, overlap, iteration=None):
        super().__init__(f"overlap <phi|zeta> = {overlap:.3e} is not positive")
        self.overlap = overlap
        self.iteration = iteration


class CalibrationFailed(GnqaError):
    pass


class ParseError(GnqaError, ValueError):
    def __init__(self, message, line=None, column=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
            if column is not None:
                where += f"{column}:"
        super().__init__(f"{where} {message}" if where else message)
        self.line = line
        self.column = column


class InfeasibleSpec(GnqaError, ValueError):
    pass


class GenerationTimeout(GnqaError):
    pass
