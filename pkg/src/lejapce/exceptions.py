"""Exception hierarchy shared by the library and the CLI.

The CLI maps these to process exit codes (see :mod:`lejapce.cli`).
"""


class LejaPceError(Exception):
    """Base class for all errors raised by lejapce."""


class ConfigurationError(LejaPceError, ValueError):
    """Invalid user configuration (budgets, tolerances, distribution specs)."""


class ContractError(LejaPceError, ValueError):
    """A documented precondition of an operation was violated by the caller."""


class ModelEvaluationError(LejaPceError, RuntimeError):
    """The model failed or returned a non-finite value.

    Attributes
    ----------
    point : tuple of float or None
        The input realization at which the failure happened, when known.
    """

    def __init__(self, message, point=None):
        if point is not None:
            message = f"{message} (at y={list(point)})"
        super().__init__(message)
        self.point = None if point is None else tuple(float(v) for v in point)


class ProtocolError(ModelEvaluationError):
    """An external model child process violated the wire protocol."""


class NumericalError(LejaPceError, ArithmeticError):
    """A numerical construction broke down (singular system, recurrence breakdown)."""
