"""Exception hierarchy shared by every skewmech module.

Input problems (bad expressions, malformed model files, bad run options) derive from
``InputError``; failures that only show up while computing derive from ``NumericalError``.
The CLI maps the first family to exit code 2 and the second to exit code 3.
"""

from typing import Optional


class SkewMechError(Exception):
    """Base class for all skewmech errors."""


class InputError(SkewMechError, ValueError):
    """Invalid user input: expressions, model files or run options."""


class ExpressionSyntaxError(InputError):
    """Expression source does not match the grammar."""

    def __init__(self, message: str, offset: int, source: str = ""):
        """Initialize the syntax error.

        Args:
            message: Description of the problem
            offset: Byte offset into the UTF-8 encoded source
            source: The offending source text
        """
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.source = source


class UnknownFunctionError(ExpressionSyntaxError):
    """A call names a function outside the built-in set."""


class ModelError(InputError):
    """A model file violates the format or an algebroid invariant."""

    def __init__(self, message: str, path: str = ""):
        """Initialize the model error.

        Args:
            message: Description of the problem
            path: Dotted location inside the model document (e.g. ``anchor[1][0]``)
        """
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class ConfigError(InputError):
    """Invalid run configuration."""


class NumericalError(SkewMechError, RuntimeError):
    """A computation failed or produced inconsistent numbers."""


class EvaluationError(NumericalError):
    """Expression evaluation failed."""


class UnboundVariableError(EvaluationError):
    """An expression references a variable missing from the binding."""


class DomainError(EvaluationError):
    """A function was evaluated outside its real domain, or the result is not finite."""


class ChartDomainError(NumericalError):
    """A base point lies outside the model's chart."""


class IntegrationError(NumericalError):
    """Time integration aborted."""

    def __init__(self, message: str, time: Optional[float] = None):
        """Initialize the integration error.

        Args:
            message: Description of the failure
            time: Integration time at which the failure happened
        """
        super().__init__(message if time is None else f"{message} (t={time:.6g})")
        self.time = time


class ConsistencyError(NumericalError):
    """Two independent computations of the same quantity disagree."""


class PreconditionError(NumericalError):
    """A numerically checked precondition does not hold."""


class RankDeficiencyError(NumericalError):
    """A matrix expected to have full rank is rank deficient."""


class ContainmentError(PreconditionError):
    """A target value does not lie in the image of a fiber map."""
