"""Exception hierarchy shared by all iterlearn modules."""


class IterLearnError(Exception):
    """Base class for all library errors."""


class DimensionError(IterLearnError, ValueError):
    """Array shapes or lengths do not line up."""


class DomainError(IterLearnError, ValueError):
    """A value lies outside the domain an operation accepts."""


class ParameterError(IterLearnError, ValueError):
    """Invalid parameters for a schedule, model or configuration."""


class ImpossibleDataError(IterLearnError, ValueError):
    """Observed data has zero likelihood under every hypothesis."""


class BudgetError(IterLearnError, RuntimeError):
    """A computation would exceed its configured size budget."""


class InvariantViolation(IterLearnError, AssertionError):
    """A proven bound or identity failed to hold numerically."""


class ConfigError(IterLearnError, ValueError):
    """An experiment configuration could not be parsed or validated."""
