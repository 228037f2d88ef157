"""
Error hierarchy for interval-valued functional regression.

Every error carries a short ``category`` so the CLI can print a single
machine-parsable line and the HTTP layer can map it to a 400 response.
"""


class IntervalRegressionError(Exception):
    """Base class for all package errors"""

    category = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def one_line(self) -> str:
        detail = " ".join(self.message.split())
        return f"error[{self.category}]: {detail}"


class BasisDomainError(IntervalRegressionError, ValueError):
    """Evaluation point outside a basis domain, or mismatched domains"""

    category = "domain"


class DataValidationError(IntervalRegressionError, ValueError):
    """Raw data violates a documented data property"""

    category = "validation"


class ShapeMismatchError(IntervalRegressionError, ValueError):
    """Arrays or datasets have incompatible shapes or bases"""

    category = "shape"


class ConfigurationError(IntervalRegressionError, ValueError):
    """Invalid run or model configuration"""

    category = "config"


class EstimationError(IntervalRegressionError, ValueError):
    """Estimation could not proceed (empty data, failed factorization, bad alpha)"""

    category = "estimation"


class StudyReplicateError(IntervalRegressionError):
    """A Monte Carlo replicate failed; wraps the original error"""

    category = "study"

    def __init__(self, case_index: int, replicate: int, cause: Exception):
        super().__init__(f"case {case_index}, replicate {replicate}: {cause}")
        self.case_index = case_index
        self.replicate = replicate
        self.cause = cause

    def __reduce__(self):
        # Worker processes pickle exceptions back to the parent.
        return (self.__class__, (self.case_index, self.replicate, self.cause))
