"""
Analytic Oracles
Closed forms for a qubit with H = h sigma_z and sigma_x damping at rate gamma:
states, spectra, eigenvectors and every thermodynamic rate, plus the quadrature
reference for the coherent-start energy budget.
"""

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy.integrate import quad

from trajthermo.core.exceptions import InputValidationError, NumericalConsistencyError, OracleUnavailableError
from trajthermo.dynamics.linalg import ComplexMatrix, DensityMatrix
from trajthermo.scenarios.catalog import Scenario, get_scenario


IMAG_TOL = 1e-10
CRITICAL_TOL = 1e-12

# Reported values for the coherent start over [0, 10] (gamma = 0.1, omega0 = 1, beta = 1)
PUBLISHED_ENERGY_BUDGET = {"U": -0.25, "Q_tbsta": -0.138, "W_tbsta": -0.112}


def _real(value: complex, what: str) -> float:
    value = complex(value)
    if abs(value.imag) > IMAG_TOL:
        raise NumericalConsistencyError(f"Closed form for {what} has imaginary residue {value.imag:.3e}")
    return value.real


def _delta(gamma: float, h: float) -> complex:
    """(gamma^2 - 4h^2)^(1/2); imaginary when underdamped."""
    return np.sqrt(complex(gamma * gamma - 4.0 * h * h))


def _sinhc(delta: complex, t: float) -> complex:
    """sinh(delta t)/delta with the critically damped limit t."""
    if abs(delta) < CRITICAL_TOL:
        return complex(t)
    return np.sinh(delta * t) / delta


def bloch_z(z0: float, gamma: float, t: float) -> float:
    return z0 * np.exp(-2.0 * gamma * t)


def coherence(c0: complex, gamma: float, h: float, t: float) -> complex:
    """rho_01(t) for arbitrary rho_01(0)."""
    x0, y0 = c0.real, c0.imag
    delta = _delta(gamma, h)
    ch, sh = np.cosh(delta * t), _sinhc(delta, t)
    damp = np.exp(-gamma * t)
    x = _real(damp * (x0 * ch + (2.0 * h * y0 + gamma * x0) * sh), "Re rho_01")
    y = _real(damp * (y0 * ch + (-2.0 * h * x0 - gamma * y0) * sh), "Im rho_01")
    return complex(x, y)


def qubit_state(z: float, c: complex) -> DensityMatrix:
    return np.array([[0.5 * (1.0 + z), c], [np.conj(c), 0.5 * (1.0 - z)]], dtype=complex)


def bloch_vector(z: float, c: complex) -> np.ndarray:
    return np.array([2.0 * c.real, -2.0 * c.imag, z])


def qubit_eigenvalues(z: float, c: complex) -> np.ndarray:
    """Ascending (r_-, r_+) = (1 -/+ |n|)/2."""
    n = float(np.linalg.norm(bloch_vector(z, c)))
    return np.array([0.5 * (1.0 - n), 0.5 * (1.0 + n)])


def qubit_eigenvectors(z: float, c: complex) -> ComplexMatrix:
    """Columns for (r_-, r_+); the -/+ vectors are (2c, -/+|n| - z) up to norm."""
    n = float(np.linalg.norm(bloch_vector(z, c)))
    if abs(c) < 1e-15:
        # Diagonal state: |1> carries the smaller weight when z > 0
        return np.array([[0, 1], [1, 0]], dtype=complex) if z >= 0 else np.eye(2, dtype=complex)
    minus = np.array([2.0 * c, -n - z], dtype=complex)
    plus = np.array([2.0 * c, n - z], dtype=complex)
    return np.column_stack([minus / np.linalg.norm(minus), plus / np.linalg.norm(plus)])


def qubit_rates(z: float, c: complex, gamma: float, h: float, beta: float) -> Dict[str, float]:
    """
    Closed-form rates for constant H = h sigma_z.

    With n the Bloch vector: Qdot_tbsta = h |n|' n_z/|n|, Sdot = -(|n|'/2) ln((1+|n|)/(1-|n|)),
    Udot = Qdot_conv = qdot_sc = h z', and every work rate except Wdot_cd is zero.
    """
    zdot = -2.0 * gamma * z
    cdot = -2j * h * c + gamma * (np.conj(c) - c)
    n = float(np.linalg.norm(bloch_vector(z, c)))
    udot = h * zdot
    if n < 1e-15:
        ndot, qtb, sdot = 0.0, 0.0, 0.0
    else:
        ndot = (z * zdot + 4.0 * float(np.real(np.conj(c) * cdot))) / n
        qtb = h * ndot * z / n
        # Pure states have a stationary spectrum to first order
        sdot = 0.0 if n >= 1.0 or ndot == 0.0 else -0.5 * ndot * float(np.log((1.0 + n) / (1.0 - n)))
    wcd = udot - qtb
    return {
        "Udot": udot,
        "Qdot_conv": udot,
        "Wdot_conv": 0.0,
        "Qdot_tbsta": qtb,
        "Wdot_tbsta": wcd,
        "Wdot_cd": wcd,
        "Sdot": sdot,
        "Sirdot": sdot - beta * qtb,
        "qdot_sc": udot,
        "wdot_sc": 0.0,
    }


def pure_start_coherence(gamma: float, h: float, t: float) -> complex:
    """rho_01(t) from (I + sigma_x)/2: e^{-gamma t}(D cosh Dt + (gamma - 2ih) sinh Dt)/(2D)."""
    delta = _delta(gamma, h)
    value = np.exp(-gamma * t) * (np.cosh(delta * t) + (gamma - 2j * h) * _sinhc(delta, t)) / 2.0
    return complex(value)


def pure_start_eigenvalues(gamma: float, h: float, t: float) -> np.ndarray:
    """
    (r_-, r_+) = 1/2 -/+ (e^{-gamma t}/2) (F/D^2)^(1/2) with
    F = gamma^2 cosh 2Dt + gamma D sinh 2Dt - 4h^2.
    """
    delta = _delta(gamma, h)
    if abs(delta) < CRITICAL_TOL:
        # D -> 0 limit of F/D^2
        ratio = complex(1.0 + 2.0 * gamma * t + 2.0 * gamma * gamma * t * t)
    else:
        f = gamma**2 * np.cosh(2.0 * delta * t) + gamma * delta * np.sinh(2.0 * delta * t) - 4.0 * h * h
        ratio = f / (delta * delta)
    radius = 0.5 * np.exp(-gamma * t) * np.sqrt(max(_real(ratio, "F/D^2"), 0.0))
    return np.array([0.5 - radius, 0.5 + radius])


def pure_start_eigenvectors(gamma: float, h: float, t: float) -> ComplexMatrix:
    """Columns (c/|c| |0> -/+ |1>)/sqrt(2) for (r_-, r_+)."""
    c = pure_start_coherence(gamma, h, t)
    phase = c / abs(c)
    return np.array([[phase, phase], [-1.0, 1.0]], dtype=complex) / np.sqrt(2.0)


@dataclass(frozen=True)
class ReferenceRecord:
    """Closed-form quantities at one time; absent oracles are None."""

    t: float
    state: Optional[DensityMatrix]
    eigenvalues: Optional[np.ndarray]
    eigenvectors: Optional[ComplexMatrix]
    rates: Optional[Dict[str, float]]


def analytic_reference(s: Scenario, t: float) -> ReferenceRecord:
    """Exact state, spectrum and rates of a built-in scenario at time t."""
    if not s.oracles.state:
        raise OracleUnavailableError("Scenario has no closed-form oracle", [f"scenario {s.name!r}"])
    if not s.t0 <= t <= s.tf:
        raise InputValidationError("Oracle time outside the scenario window", [f"t={t}, window=[{s.t0}, {s.tf}]"])
    rho0 = s.initial_state
    z0 = float(np.real(rho0[0, 0] - rho0[1, 1]))
    c0 = complex(rho0[0, 1])
    h, tau = s.level_scale, t - s.t0
    z = bloch_z(z0, s.gamma, tau)
    c = coherence(c0, s.gamma, h, tau)
    return ReferenceRecord(
        t=float(t),
        state=qubit_state(z, c),
        eigenvalues=qubit_eigenvalues(z, c) if s.oracles.eigenvalues else None,
        eigenvectors=qubit_eigenvectors(z, c) if s.oracles.eigenvectors else None,
        rates=qubit_rates(z, c, s.gamma, h, s.beta) if s.oracles.rates else None,
    )


def energy_budget_oracle(
    gamma: float = 0.1,
    omega0: float = 1.0,
    beta: float = 1.0,
    t_final: float = 10.0,
    convention: str = "sz-half",
) -> Dict[str, float]:
    """
    Totals of U, Q_tbsta and W_tbsta for the coherent start, by adaptive
    quadrature of the closed-form rates over [0, t_final].
    """
    s = get_scenario("case-iii", gamma=gamma, omega0=omega0, beta=beta, convention=convention).with_window(0.0, t_final)

    def rate(name: str):
        return lambda t: analytic_reference(s, t).rates[name]

    totals = {}
    for key, name in (("U", "Udot"), ("Q_tbsta", "Qdot_tbsta"), ("W_tbsta", "Wdot_tbsta")):
        value, _ = quad(rate(name), 0.0, t_final, limit=400, epsabs=1e-12, epsrel=1e-10)
        totals[key] = float(value)
    return totals


def published_energy_budget() -> Dict[str, float]:
    return dict(PUBLISHED_ENERGY_BUDGET)
