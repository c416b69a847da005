"""Exception hierarchy shared by every catelab module."""


class CatelabError(Exception):
    """Base class for all errors raised by catelab."""


class ParameterDomainError(CatelabError, ValueError):
    """A model or covariate parameter lies outside its valid domain.

    Attributes
    ----------
    field : str
        Name of the offending parameter (e.g. ``"rho"``).
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class EstimationError(CatelabError):
    """An estimator could not be evaluated on the supplied data."""


class SingularFitError(EstimationError):
    """The least-squares design matrix is rank deficient.

    Attributes
    ----------
    column : str
        Name of the first design column found to be linearly dependent on
        the columns before it.
    """

    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"design matrix is rank deficient in column {column!r}")


class UnsupportedModelError(CatelabError):
    """The requested computation is only defined for a narrower model family."""


class UndefinedCorrelationError(CatelabError):
    """A correlation was requested where one of the variances is zero."""


class ReplicationError(CatelabError):
    """Wraps a failure inside one Monte Carlo replication."""

    def __init__(self, rep_index, cause):
        self.rep_index = rep_index
        self.cause = cause
        super().__init__(f"replication {rep_index} failed: {cause}")


class ConfigError(CatelabError):
    """A scenario configuration could not be parsed or validated.

    Attributes
    ----------
    line : int or None
        1-based line number in the source file, when known.
    field : str or None
        Configuration key the error refers to, when known.
    """

    def __init__(self, message, line=None, field=None):
        self.reason = message
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
