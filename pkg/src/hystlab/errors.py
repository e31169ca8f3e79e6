"""Exception hierarchy shared by all modules.

Every error carries an ``exit_code`` used by the command-line front end:
2 for invalid input, 3 for numerical failures, 4 for boundary contamination.
"""

from __future__ import annotations


class HystlabError(Exception):
    exit_code = 3


class ValidationError(HystlabError, ValueError):
    exit_code = 2


class InconsistentInitialData(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


class ParamMismatch(ValidationError):
    pass


class DomainError(HystlabError):
    pass


class NumericalError(HystlabError):
    pass


class ToleranceNotMet(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class NoBracket(NumericalError):
    pass


class MissingSwitch(NumericalError):
    pass


class IncompleteHistory(NumericalError):
    pass


class InsufficientData(NumericalError):
    pass


class NonPhysicalState(NumericalError):
    pass


class StabilityViolation(NumericalError):
    pass


class BlowUp(NumericalError):
    pass


class NoStableRoot(NumericalError):
    pass


class TransversalityLost(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class BoundaryContamination(HystlabError):
    exit_code = 4
