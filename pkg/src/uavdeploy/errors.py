"""Exception types shared across the package.

The CLI maps :class:`ValidationError` to exit code 2 and
:class:`InfeasibleModelError` to exit code 3.
"""


class ValidationError(ValueError):
    """Bad input: malformed scenario, out-of-range parameter, unknown method."""


class InfeasibleModelError(RuntimeError):
    """The model has no solution for the given inputs."""


class NoOptimalAngleError(InfeasibleModelError):
    pass


class BudgetExceededError(RuntimeError):
    """An exhaustive search would exceed its configured evaluation budget."""
