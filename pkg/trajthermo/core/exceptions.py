"""
Error Types
Exception hierarchy carrying an error code and details, mapped to CLI exit codes.
"""

from typing import Any, Dict, List, Optional


class TrajThermoError(Exception):
    """Base error with a programmatic code and structured details."""

    error_code = "trajthermo_error"
    exit_code = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {"error_code": self.error_code, "message": self.message, "details": self.details}


class InputValidationError(TrajThermoError):
    """Invalid user input: matrices, parameters, files."""

    error_code = "validation_error"
    exit_code = 2

    def __init__(self, message: str, issues: Optional[List[str]] = None, **details: Any):
        self.issues = list(issues or [])
        if self.issues:
            message = f"{message}: " + "; ".join(self.issues)
        super().__init__(message, {"issues": self.issues, **details})


class DimensionMismatchError(InputValidationError):
    error_code = "dimension_mismatch"


class SnapshotFormatError(InputValidationError):
    error_code = "snapshot_format"


class OracleUnavailableError(InputValidationError):
    error_code = "oracle_unavailable"


class NumericalError(TrajThermoError):
    """Numerical failure during propagation or analysis."""

    error_code = "numerical_error"
    exit_code = 3


class IntegrationError(NumericalError):
    error_code = "integration_error"

    def __init__(self, message: str, t: float, **details: Any):
        self.t = t
        super().__init__(f"{message} at t={t:.6g}", {"t": t, **details})


class RankDeficiencyError(NumericalError):
    error_code = "rank_deficiency"

    def __init__(self, eigenvalue: float, t: Optional[float] = None, index: Optional[int] = None):
        self.eigenvalue = eigenvalue
        self.t = t
        where = f" at t={t:.6g}" if t is not None else ""
        super().__init__(
            f"State is rank deficient{where}: eigenvalue {eigenvalue:.3e} (index {index}) "
            "is below the rank floor; enable regularization to proceed",
            {"eigenvalue": eigenvalue, "t": t, "index": index},
        )


class RankChangeError(NumericalError):
    error_code = "rank_change"


class SupportError(NumericalError):
    error_code = "support_error"


class NumericalConsistencyError(NumericalError):
    error_code = "numerical_consistency"


class ConvergenceError(NumericalError):
    error_code = "convergence_error"


class AuditFailure(NumericalError):
    error_code = "audit_failure"
