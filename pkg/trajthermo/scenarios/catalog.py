"""
Scenario Catalog
Built-in two-level scenarios: thermal, pure and coherent starts under sigma_x damping,
plus a unitary and a driven-ramp variant.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np

from trajthermo.core.exceptions import InputValidationError
from trajthermo.dynamics.generators import (
    Convention,
    LindbladGenerator,
    convention_scale,
    damped_qubit_generator,
)
from trajthermo.dynamics.linalg import (
    IDENTITY_2,
    SIGMA_X,
    SIGMA_Z,
    DensityMatrix,
    gibbs_state,
    validate_density,
)


SCENARIO_NAMES = ("case-i", "case-ii", "case-iii", "unitary", "driven-ramp")


@dataclass(frozen=True)
class OracleAvailability:
    """Which closed-form references a scenario offers."""

    state: bool = False
    eigenvalues: bool = False
    eigenvectors: bool = False
    rates: bool = False

    def as_dict(self) -> Dict[str, bool]:
        return {
            "state": self.state,
            "eigenvalues": self.eigenvalues,
            "eigenvectors": self.eigenvectors,
            "rates": self.rates,
        }


FULL_ORACLE = OracleAvailability(state=True, eigenvalues=True, eigenvectors=True, rates=True)


@dataclass(frozen=True)
class Scenario:
    """
    A named trajectory recipe.

    beta_eff is the inverse temperature whose Gibbs state is the instantaneous
    steady state of the generator (None when there is none); the bound audit
    verdict uses it.
    """

    name: str
    description: str
    gamma: float
    omega0: float
    beta: float
    initial_state: DensityMatrix
    t0: float = 0.0
    tf: float = 10.0
    convention: Convention = "sz"
    ramp_rate: float = 0.0
    analysis_start: Optional[float] = None
    beta_eff: Optional[float] = None
    applicability: str = "not-applicable"
    oracles: OracleAvailability = field(default_factory=OracleAvailability)

    def __post_init__(self):
        object.__setattr__(self, "initial_state", validate_density(self.initial_state, f"{self.name} initial state"))
        if not self.tf > self.t0:
            raise InputValidationError("Scenario window must satisfy tf > t0", [f"{self.name}: [{self.t0}, {self.tf}]"])

    @property
    def level_scale(self) -> float:
        """h in H = h sigma_z at t = 0."""
        return convention_scale(self.convention) * self.omega0

    def generator(self) -> LindbladGenerator:
        return damped_qubit_generator(self.gamma, self.omega0, self.convention, self.ramp_rate)

    def with_window(self, t0: Optional[float] = None, tf: Optional[float] = None) -> "Scenario":
        return replace(self, t0=self.t0 if t0 is None else t0, tf=self.tf if tf is None else tf)

    def summary(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "description": self.description,
            "gamma": self.gamma,
            "omega0": self.omega0,
            "beta": self.beta,
            "convention": self.convention,
            "ramp_rate": self.ramp_rate,
            "window": [self.t0, self.tf],
            "analysis_start": self.analysis_start,
            "beta_eff": self.beta_eff,
            "applicability": self.applicability,
            "oracles": self.oracles.as_dict(),
        }


def catalog(
    gamma: float = 0.1,
    omega0: float = 1.0,
    beta: float = 1.0,
    convention: Convention = "sz",
    ramp_rate: float = 0.1,
) -> List[Scenario]:
    """The five built-in scenarios for one parameter set."""
    if not np.isfinite(beta) or beta <= 0:
        raise InputValidationError("Inverse temperature must be finite and positive", [f"beta={beta}"])
    scale = convention_scale(convention)
    h0 = scale * omega0 * SIGMA_Z
    coherent = 0.5 * (IDENTITY_2 + 0.5 * (SIGMA_X + SIGMA_Z))
    # sigma_x damping is unital: its steady state is I/2 at any gap
    unital = dict(beta_eff=0.0, applicability="applicable with beta_eff = 0")
    return [
        Scenario(
            name="case-i",
            description="Thermal start relaxing under sigma_x damping",
            gamma=gamma, omega0=omega0, beta=beta, convention=convention,
            initial_state=gibbs_state(h0, beta), oracles=FULL_ORACLE, **unital,
        ),
        Scenario(
            name="case-ii",
            description="Pure (I + sigma_x)/2 start; rank deficient at t0, analysis starts later",
            gamma=gamma, omega0=omega0, beta=beta, convention=convention,
            initial_state=0.5 * (IDENTITY_2 + SIGMA_X), analysis_start=1e-3, oracles=FULL_ORACLE, **unital,
        ),
        Scenario(
            name="case-iii",
            description="Coherent start (I + (sigma_x + sigma_z)/2)/2",
            gamma=gamma, omega0=omega0, beta=beta, convention=convention,
            initial_state=coherent, oracles=FULL_ORACLE, **unital,
        ),
        Scenario(
            name="unitary",
            description="Coherent start under closed dynamics (gamma = 0)",
            gamma=0.0, omega0=omega0, beta=beta, convention=convention,
            initial_state=coherent, beta_eff=0.0, applicability="closed system",
            oracles=FULL_ORACLE,
        ),
        Scenario(
            name="driven-ramp",
            description="Linear frequency ramp from the Gibbs state of H(0)",
            gamma=gamma, omega0=omega0, beta=beta, convention=convention, ramp_rate=ramp_rate,
            initial_state=gibbs_state(h0, beta), **unital,
        ),
    ]


def get_scenario(name: str, **params) -> Scenario:
    """Look up a built-in scenario by name with parameter overrides."""
    for scenario in catalog(**params):
        if scenario.name == name:
            return scenario
    raise InputValidationError("Unknown scenario", [f"{name!r}; expected one of {', '.join(SCENARIO_NAMES)}"])
