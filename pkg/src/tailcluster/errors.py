"""Exception hierarchy.

The CLI maps :class:`ConfigurationError` to exit code 2 and every
:class:`NumericalFailure` subclass to exit code 3.
"""


class TailClusterError(Exception):
    """Base class for all library errors."""


class ConfigurationError(TailClusterError, ValueError):
    """Invalid user input: bad parameters, malformed config, unknown keys."""


class NumericalFailure(TailClusterError, ArithmeticError):
    """A numerical routine could not deliver a trustworthy result."""


class ContractViolation(NumericalFailure):
    """A sampled object broke an invariant the model promised to keep."""


class DegenerateConditioningError(NumericalFailure):
    """A rejection sampler accepted nothing within its draw budget."""


class TruncationWarning(UserWarning):
    """A series or window truncation hit its budget before its target."""
