"""
This module contains the exceptions raised by BIoTBound.
Each exception carries the exit code used by the command line.
"""

class BiotBoundError(Exception):
    """
    This class is the base class for all the BIoTBound errors.
    """
    exit_code = 3


class ConfigError(BiotBoundError):
    """
    Raised when a config file cannot be read or does not follow the schema.
    """
    exit_code = 2


class ScenarioError(BiotBoundError):
    """
    Base class for invalid scenario or attack descriptions.
    """
    exit_code = 2


class InvalidParameterError(ScenarioError):
    """
    Raised when a numeric parameter is outside of its domain.
    """


class InvalidPartitionError(ScenarioError):
    """
    Raised when the honest and malicious sets do not partition the devices.
    """


class InvalidForkError(ScenarioError):
    """
    Raised when the fork point is outside of {1, ..., L0}.
    """


class DegenerateScenarioError(ScenarioError):
    """
    Raised when the scenario has no honest device (the bound would be infinite).
    """


class NumericError(BiotBoundError):
    """
    Base class for numerical failures.
    """
    exit_code = 3


class PartialsUnavailableError(NumericError):
    """
    Raised when a derivative is requested from a pmf without partials.
    """


class SingularWeightError(NumericError):
    """
    Raised when an outcome has a zero malicious factor but a nonzero derivative.
    """


class SingularFimError(NumericError):
    """
    Raised when the nuisance block of the FIM cannot be inverted.
    """


class DegenerateInformationError(NumericError):
    """
    Raised when the honest data carry no information about theta.
    """


class InfeasibleRelaxationError(NumericError):
    """
    Raised when the relaxed problem has no feasible point.
    """


class CertificateError(NumericError):
    """
    Raised when an optimality certificate does not hold.
    """


class UnsupportedDimensionError(NumericError):
    """
    Raised when an operation only supports scalar attack parameters.
    """


class UnidentifiableError(NumericError):
    """
    Raised when the likelihood is flat over the search box.
    """


class OptimizationFailedError(NumericError):
    """
    Raised when every start of the attack optimizer failed.
    """
    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace or []


class OutcomeSpaceTooLargeError(BiotBoundError):
    """
    Raised when the outcome space exceeds the configured cap.
    """
    exit_code = 4

    def __init__(self, required: int, cap: int):
        super().__init__(f"Outcome space of size {required} exceeds the cap {cap} (use --cap {required})")
        self.required = required
        self.cap = cap
