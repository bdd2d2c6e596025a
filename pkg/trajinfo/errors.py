"""Exception types raised by trajinfo"""

from typing import Optional


class TrajInfoError(RuntimeError):
    """Base class for all trajinfo runtime failures"""


class NumericalError(TrajInfoError):
    """A matrix stayed non positive-definite after jitter escalation"""

    def __init__(self, message: str, condition_number: Optional[float] = None):
        if condition_number is not None:
            message = f"{message} (condition number: {condition_number:.3e})"
        super().__init__(message)
        self.condition_number = condition_number


class HyperparameterFitError(TrajInfoError):
    """Marginal likelihood could not be evaluated at any candidate hyperparameters"""


class StaleSamplesError(TrajInfoError):
    """Optimal-trajectory samples were scored against a different dataset snapshot"""


class PlannerError(TrajInfoError):
    """iCEM could not produce a single finite-cost candidate"""


class InvalidStateError(ValueError):
    """A state or action fed to an environment contains NaN"""
