"""
Result Models
Pydantic models for run summaries and audit reports.
"""

from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


class AuditRow(BaseModel):
    """One identity or bound check."""

    name: str = Field(..., description="Check name")
    value: float = Field(..., description="Worst residual (or violating fraction) over the grid")
    tolerance: float = Field(..., description="Configured tolerance")
    passed: bool = Field(..., description="Whether the check passed")
    note: Optional[str] = Field(default=None, description="Applicability or diagnostic note")


class AuditReport(BaseModel):
    """Pass/fail table of every audit check."""

    run: str = Field(..., description="Scenario or config name")
    rows: List[AuditRow] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def failures(self) -> List[str]:
        return [row.name for row in self.rows if not row.passed]


class BoundVerdict(BaseModel):
    """Entropy-production bound at one inverse temperature."""

    beta: float
    applicability: str
    bound_fraction: float = Field(..., description="Fraction of grid points with Sirdot >= beta Wdot_cd")
    corollary_fraction: float = Field(..., description="Fraction with the relative-entropy corollary")
    min_margin: float
    holds_everywhere: bool


class Provenance(BaseModel):
    """Everything needed to reproduce a run."""

    software_version: str
    created_at: datetime = Field(default_factory=_utcnow)
    parameters: Dict[str, Any] = Field(default_factory=dict)
    step: Optional[float] = None
    convention: Optional[str] = None
    rhodot_source: str
    tolerances: Dict[str, float] = Field(default_factory=dict)
    regularize_delta: Optional[float] = None
    analysis_start: Optional[float] = None


class RunSummary(BaseModel):
    """JSON summary written next to the ledger CSV."""

    success: bool = Field(default=True)
    run: str
    points: int
    window: List[float]
    totals: Dict[str, float] = Field(default_factory=dict, description="Integrated changes over the window")
    max_residuals: Dict[str, float] = Field(default_factory=dict)
    trace_drift: float = 0.0
    closure_error: float = 0.0
    bound_audit: List[BoundVerdict] = Field(default_factory=list)
    audit: Optional[AuditReport] = None
    reference_budget: Optional[Dict[str, Dict[str, float]]] = Field(
        default=None, description="Closed-form and published energy budgets for the coherent start"
    )
    spectral_flow: Dict[str, Any] = Field(default_factory=dict, description="Crossing diagnostics")
    warnings: List[str] = Field(default_factory=list)
    provenance: Provenance
    outputs: Dict[str, str] = Field(default_factory=dict)
