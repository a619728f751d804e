"""Exception hierarchy shared by every module."""


class RelclockError(Exception):
    """Base class; the CLI maps any subclass to a module-named nonzero exit."""


class DomainError(RelclockError, ValueError):
    """An input lies outside the validity domain of an operation."""


class SingularityError(DomainError):
    """Evaluation point coincides with a point-mass source."""


class VariantMismatchError(RelclockError, TypeError):
    """Operation called with a metric variant it does not support."""


class OccultationError(DomainError):
    """A light ray intersects the body of a gravity source."""


class ConvergenceError(RelclockError, ArithmeticError):
    """An iterative or adaptive numerical scheme failed to converge."""


class AccuracyError(RelclockError, ArithmeticError):
    """Integrator self-test drift exceeded its tolerance."""


class RankError(RelclockError, ArithmeticError):
    """Design matrix is rank deficient or too badly conditioned to solve."""


class ConfigError(RelclockError, ValueError):
    """A mission configuration failed to parse or validate.

    ``field`` is the dotted path of the offending entry (empty when the
    whole document is at fault); ``line`` is its 1-based source line when known.
    """

    def __init__(self, message: str, field: str = "", line: int | None = None, source: str = ""):
        self.message, self.field, self.line, self.source = message, field, line, source
        where = []
        if source:
            where.append(source + (f":{line}" if line else ""))
        elif line:
            where.append(f"line {line}")
        if field:
            where.append(f"field {field}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
