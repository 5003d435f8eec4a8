"""Exception hierarchy shared by all modules."""


class WeightApproxError(Exception):
    """Base class for every error raised by the package."""


class ExprSyntaxError(WeightApproxError, ValueError):
    """Malformed expression text.

    ``offset`` is the byte offset in the source text where parsing stopped and
    ``expected`` a short hint of what the parser wanted there.
    """

    def __init__(self, message, offset, expected=None, text=None):
        self.offset = offset
        self.expected = expected
        self.text = text
        hint = f", expected {expected!r}" if expected else ""
        super().__init__(f"{message} at offset {offset}{hint}")


class UnknownIdentifierError(ExprSyntaxError):
    pass


class EvaluationDomainError(WeightApproxError, ArithmeticError):
    """Expression is ill-posed at ``point`` (e.g. inf - inf, log of a negative)."""

    def __init__(self, message, point=None):
        self.point = point
        where = f" at x={point!r}" if point is not None else ""
        super().__init__(f"{message}{where}")


class WeightInvalid(WeightApproxError, ValueError):
    """A weight is negative somewhere or vanishes on a whole subinterval."""


class NotInvertible(WeightInvalid):
    pass


class WeightUnbounded(WeightInvalid):
    def __init__(self, message, component=None):
        self.component = component
        super().__init__(message)


class MissingOverride(WeightApproxError, ValueError):
    """f(a) is needed at a singular point ``a`` but no explicit value was given."""

    def __init__(self, point, component=None):
        self.point = point
        self.component = component
        prefix = f"component {component}: " if component is not None else ""
        super().__init__(f"{prefix}missing override value f({point!r}) at a singular point")


class ReportMismatch(WeightApproxError, ValueError):
    pass


class BridgeOverlap(WeightApproxError, ValueError):
    pass


class MaxDegreeExceeded(WeightApproxError):
    """No degree in the sweep reached the target error.

    ``trace`` holds ``(degree, error)`` pairs of every attempt and ``diagnosis``
    a short membership-style explanation, when one could be produced.
    """

    def __init__(self, message, trace=(), diagnosis=None):
        self.trace = list(trace)
        self.diagnosis = diagnosis
        super().__init__(message)


class ComponentFailed(WeightApproxError):
    def __init__(self, index, cause):
        self.index = index
        self.cause = cause
        super().__init__(f"component {index} failed: {cause}")


class CertificateInvalid(WeightApproxError):
    pass


class JobError(WeightApproxError):
    """Invalid job file; ``section``/``key``/``line`` locate the problem."""

    def __init__(self, message, section=None, key=None, line=None):
        self.section = section
        self.key = key
        self.line = line
        loc = ""
        if section is not None or key is not None:
            loc = f"[{section or ''}]" + (f".{key}" if key else "")
        if line is not None:
            loc += f" (line {line})"
        super().__init__(f"{loc}: {message}" if loc else message)
