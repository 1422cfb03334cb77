"""Mixing special flows over Liouville torus translations and their Schrodinger potentials."""

__version__ = "0.1.0"

from .errors import (BudgetExceeded, ConfigError, GordonFlowError, PositivityViolation,  # noqa: E402
                     PrecisionError, PreconditionError, ScheduleOverflow)

__all__ = ["__version__", "BudgetExceeded", "ConfigError", "GordonFlowError", "PositivityViolation",
           "PrecisionError", "PreconditionError", "ScheduleOverflow"]
