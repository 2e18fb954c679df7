"""Exception and warning types shared by all modules."""


class DbarError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(DbarError, ValueError):
    pass


class ParseError(DbarError, ValueError):
    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class DomainError(DbarError, ValueError):
    pass


class SingularEvaluationError(DbarError, ArithmeticError):
    """Raised when an expression is evaluated on a branch cut or a pole."""


class EvaluationError(DbarError, ArithmeticError):
    """A quadrature integrand produced a non-finite value at some node."""


class UnsupportedError(DbarError, NotImplementedError):
    """The symbolic path cannot handle this input; callers may fall back."""


class ContractViolation(DbarError):
    pass


class PreconditionError(DbarError):
    """A mathematical hypothesis of an algorithm is not satisfied.

    ``hypothesis`` is a short human readable name of the violated assumption.
    """

    def __init__(self, message, hypothesis=""):
        self.hypothesis = hypothesis
        super().__init__(message)


class AccuracyWarning(UserWarning):
    pass


class HypothesisWarning(UserWarning):
    """Issued when an algorithm runs outside the range where its bounds are proven."""
