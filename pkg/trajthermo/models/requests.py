"""
Run Configuration Models
Pydantic models for run, analyze and audit configuration documents.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from trajthermo.core.exceptions import InputValidationError, TrajThermoError
from trajthermo.dynamics.generators import LindbladGenerator, PiecewisePolynomial, build_generator
from trajthermo.dynamics.propagator import IntegratorConfig
from trajthermo.utils.serialization import matrix_from_json


MatrixJSON = List[List[Any]]


def _parse_matrix(value: Any, where: str) -> np.ndarray:
    try:
        return matrix_from_json(value, where)
    except TrajThermoError as exc:
        raise ValueError(exc.message) from exc


class HamiltonianTermSpec(BaseModel):
    """One driven term f(t) M with a piecewise-polynomial schedule."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., description="Label for the drive")
    operator: MatrixJSON = Field(..., description="Hermitian operator M as [re, im] entries")
    knots: List[float] = Field(..., min_length=1, description="Piece start times")
    coefficients: List[List[float]] = Field(..., min_length=1, description="Ascending powers per piece (degree <= 3)")

    @field_validator("operator")
    @classmethod
    def validate_operator(cls, v):
        _parse_matrix(v, "operator")
        return v

    def schedule(self) -> PiecewisePolynomial:
        return PiecewisePolynomial(tuple(self.knots), tuple(tuple(c) for c in self.coefficients))


class JumpSpec(BaseModel):
    """Dissipative channel."""

    model_config = ConfigDict(extra="forbid")

    rate: float = Field(..., ge=0, description="Jump rate (1/time)")
    operator: MatrixJSON = Field(..., description="Jump operator as [re, im] entries")

    @field_validator("operator")
    @classmethod
    def validate_operator(cls, v):
        _parse_matrix(v, "operator")
        return v


class GeneratorSpec(BaseModel):
    """Inline Lindblad generator."""

    model_config = ConfigDict(extra="forbid")

    base: MatrixJSON = Field(..., description="Static part of H")
    drives: List[HamiltonianTermSpec] = Field(default_factory=list)
    jumps: List[JumpSpec] = Field(default_factory=list)
    lamb_shift: Optional[MatrixJSON] = Field(default=None, description="Static Lamb-shift correction")

    @field_validator("base", "lamb_shift")
    @classmethod
    def validate_matrix(cls, v, info):
        if v is not None:
            _parse_matrix(v, info.field_name)
        return v

    def to_generator(self) -> LindbladGenerator:
        return build_generator(
            base=matrix_from_json(self.base, "base"),
            drives=[(d.name, matrix_from_json(d.operator, d.name), d.schedule()) for d in self.drives],
            jumps=[(j.rate, matrix_from_json(j.operator, f"jumps[{i}]")) for i, j in enumerate(self.jumps)],
            lamb_shift=None if self.lamb_shift is None else matrix_from_json(self.lamb_shift, "lamb_shift"),
        )


class HamiltonianSpec(BaseModel):
    """Hamiltonian used to analyze an external trajectory."""

    model_config = ConfigDict(extra="forbid")

    base: MatrixJSON = Field(..., description="Static part of H")
    drives: List[HamiltonianTermSpec] = Field(default_factory=list)

    @field_validator("base")
    @classmethod
    def validate_base(cls, v):
        _parse_matrix(v, "base")
        return v

    def to_generator_spec(self) -> GeneratorSpec:
        return GeneratorSpec(base=self.base, drives=self.drives)


class OutputSpec(BaseModel):
    """Shared output and audit options."""

    model_config = ConfigDict(extra="forbid")

    beta: Optional[float] = Field(default=None, gt=0, description="Inverse temperature (required, flag or config)")
    out_csv: Optional[str] = Field(default=None, description="Ledger CSV path")
    out_json: Optional[str] = Field(default=None, description="Summary JSON path")
    regularize_delta: Optional[float] = Field(default=None, ge=0, lt=1, description="Mix with I/d before analysis")
    tolerances: Dict[str, float] = Field(default_factory=dict, description="Named tolerance overrides")
    quadrature: Literal["trapezoid", "simpson"] = Field(default="trapezoid")
    partition: float = Field(default=1.0, gt=0, description="Partition-function gauge z of the virtual Hamiltonian")

    @field_validator("tolerances")
    @classmethod
    def validate_tolerances(cls, v):
        for name, value in v.items():
            if not value > 0:
                raise ValueError(f"tolerance {name} must be positive")
        return v


class RunConfig(OutputSpec):
    """Propagate a built-in scenario or an inline generator and analyze it."""

    scenario: Optional[str] = Field(default=None, description="Built-in scenario name")
    generator: Optional[GeneratorSpec] = Field(default=None, description="Inline generator")
    initial_state: Optional[MatrixJSON] = Field(default=None, description="Initial state for an inline generator")
    gamma: Optional[float] = Field(default=None, ge=0, description="Damping rate override")
    omega0: Optional[float] = Field(default=None, gt=0, description="Level frequency override")
    ramp_rate: Optional[float] = Field(default=None, description="Driven-ramp slope override")
    convention: Literal["sz", "sz-half"] = Field(default="sz", description="H = omega0 sigma_z or omega0/2 sigma_z")
    t0: Optional[float] = Field(default=None)
    tf: Optional[float] = Field(default=None)
    analysis_start: Optional[float] = Field(default=None, description="Drop earlier points before analysis")
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)
    out_snapshots: Optional[str] = Field(default=None, description="Export states for later re-analysis")

    @field_validator("initial_state")
    @classmethod
    def validate_initial_state(cls, v):
        if v is not None:
            _parse_matrix(v, "initial_state")
        return v

    @model_validator(mode="after")
    def check_source(self):
        if (self.scenario is None) == (self.generator is None):
            raise ValueError("exactly one of 'scenario' or 'generator' is required")
        if self.generator is not None:
            missing = [k for k in ("initial_state", "t0", "tf") if getattr(self, k) is None]
            if missing:
                raise ValueError(f"an inline generator needs {', '.join(missing)}")
        if self.t0 is not None and self.tf is not None and not self.tf > self.t0:
            raise ValueError("tf must exceed t0")
        return self

    @property
    def name(self) -> str:
        return self.scenario or "custom"


class AnalyzeConfig(OutputSpec):
    """Analyze density-matrix snapshots from a file."""

    snapshots: str = Field(..., description="Snapshot JSON file")
    hamiltonian: Optional[HamiltonianSpec] = Field(default=None, description="H(t) along the snapshots")
    scenario: Optional[str] = Field(default=None, description="Borrow H(t) from a built-in scenario")
    omega0: Optional[float] = Field(default=None, gt=0)
    ramp_rate: Optional[float] = Field(default=None)
    convention: Literal["sz", "sz-half"] = Field(default="sz")
    analysis_start: Optional[float] = Field(default=None)

    @model_validator(mode="after")
    def check_hamiltonian(self):
        if (self.hamiltonian is None) == (self.scenario is None):
            raise ValueError("exactly one of 'hamiltonian' or 'scenario' is required")
        return self

    @property
    def name(self) -> str:
        return Path(self.snapshots).stem


def format_validation_error(exc: ValidationError) -> List[str]:
    """Field-level diagnostics: 'path.to.field: message'."""
    issues = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "config"
        issues.append(f"{loc}: {err['msg']}")
    return issues


def read_json_document(path: Union[str, Path]) -> Dict[str, Any]:
    """Parse a JSON object from disk."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise InputValidationError("Config file not found", [str(path)]) from exc
    except json.JSONDecodeError as exc:
        raise InputValidationError("Config file is not valid JSON", [f"{path}: line {exc.lineno}: {exc.msg}"]) from exc
    if not isinstance(data, dict):
        raise InputValidationError("Config document must be a JSON object", [str(path)])
    return data


def load_config(path: Optional[Union[str, Path]], model: type, overrides: Optional[Dict[str, Any]] = None):
    """Read a JSON config document (optional), apply flag overrides and validate it."""
    data = read_json_document(path) if path is not None else {}
    return validate_config(data, model, overrides)


def validate_config(data: Dict[str, Any], model: type, overrides: Optional[Dict[str, Any]] = None):
    merged = dict(data)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "step":
            merged["integrator"] = {**merged.get("integrator", {}), "step": value}
        elif key == "tolerances":
            merged["tolerances"] = {**merged.get("tolerances", {}), **value}
        else:
            merged[key] = value
    try:
        return model.model_validate(merged)
    except ValidationError as exc:
        raise InputValidationError("Invalid configuration", format_validation_error(exc)) from exc
