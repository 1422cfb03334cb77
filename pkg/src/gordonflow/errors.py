"""Exception types shared across the package."""


class GordonFlowError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class PreconditionError(GordonFlowError, ValueError):
    """An operation was called outside its contract."""


class PrecisionError(GordonFlowError):
    """The available arithmetic precision cannot certify the requested result."""

    exit_code = 4


class ScheduleOverflow(GordonFlowError):
    """A growth schedule requested a denominator beyond the configured bit budget.

    ``partial`` carries whatever was built before the overflow (may be None).
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class PositivityViolation(GordonFlowError):
    """The assembled ceiling function is not provably positive."""


class BudgetExceeded(GordonFlowError):
    """A direct computation would exceed its work budget."""


class ConfigError(GordonFlowError):
    exit_code = 2

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
