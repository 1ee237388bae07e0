"""
Dynamical Generators
Time-dependent Hamiltonians with piecewise-polynomial drives and Lindblad dissipators.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from trajthermo.core.exceptions import DimensionMismatchError, InputValidationError
from trajthermo.dynamics.linalg import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Z,
    ComplexMatrix,
    DensityMatrix,
    HermitianMatrix,
    as_matrix,
    commutator,
    hermitize,
    validate_hermitian,
)


Convention = Literal["sz", "sz-half"]


def convention_scale(convention: Convention) -> float:
    """Energy prefactor multiplying omega0 sigma_z: 1 for 'sz', 1/2 for 'sz-half'."""
    if convention == "sz":
        return 1.0
    if convention == "sz-half":
        return 0.5
    raise InputValidationError("Unknown Hamiltonian convention", [f"convention={convention!r}"])


@dataclass(frozen=True)
class PiecewisePolynomial:
    """
    Scalar schedule built from polynomial pieces of degree <= 3.

    Piece i starts at knots[i] and is evaluated in the local variable
    (t - knots[i]); coefficients are ascending powers. The first piece
    extends to -inf and the last to +inf. At a knot the right-hand piece
    is used, so derivatives there are one-sided.
    """

    knots: Tuple[float, ...]
    coefficients: Tuple[Tuple[float, ...], ...]

    def __post_init__(self):
        if len(self.knots) != len(self.coefficients) or not self.knots:
            raise InputValidationError("Schedule needs one knot per polynomial piece")
        if any(b <= a for a, b in zip(self.knots, self.knots[1:])):
            raise InputValidationError("Schedule knots must be strictly increasing", [f"knots={self.knots}"])
        for i, coeffs in enumerate(self.coefficients):
            if not 1 <= len(coeffs) <= 4:
                raise InputValidationError("Schedule pieces must have degree <= 3", [f"piece {i}: {coeffs}"])

    @classmethod
    def constant(cls, value: float) -> "PiecewisePolynomial":
        return cls(knots=(0.0,), coefficients=((float(value),),))

    @classmethod
    def linear(cls, value0: float, slope: float, t0: float = 0.0) -> "PiecewisePolynomial":
        return cls(knots=(float(t0),), coefficients=((float(value0), float(slope)),))

    def _piece(self, t: float) -> Tuple[float, np.ndarray]:
        i = max(int(np.searchsorted(self.knots, t, side="right")) - 1, 0)
        return t - self.knots[i], np.asarray(self.coefficients[i], dtype=float)

    def __call__(self, t: float) -> float:
        x, c = self._piece(t)
        return float(P.polyval(x, c))

    def derivative(self, t: float) -> float:
        x, c = self._piece(t)
        return float(P.polyval(x, P.polyder(c))) if c.size > 1 else 0.0


@dataclass(frozen=True)
class DriveTerm:
    """One Hermitian operator scaled by a scalar schedule."""

    name: str
    operator: HermitianMatrix
    schedule: PiecewisePolynomial


@dataclass(frozen=True)
class HamiltonianSchedule:
    """
    H(t) = base + lamb_shift + sum_i f_i(t) M_i.

    The Lamb shift is an opaque static correction supplied by the caller.
    """

    base: HermitianMatrix
    drives: Tuple[DriveTerm, ...] = ()
    lamb_shift: Optional[HermitianMatrix] = None

    def __post_init__(self):
        object.__setattr__(self, "base", validate_hermitian(self.base))
        dim = self.base.shape[0]
        drives = []
        for term in self.drives:
            op = validate_hermitian(term.operator)
            if op.shape[0] != dim:
                raise DimensionMismatchError(
                    "Drive operator dimension differs from base Hamiltonian", [f"drive {term.name!r}"]
                )
            drives.append(DriveTerm(term.name, op, term.schedule))
        object.__setattr__(self, "drives", tuple(drives))
        if self.lamb_shift is not None:
            shift = validate_hermitian(self.lamb_shift)
            if shift.shape[0] != dim:
                raise DimensionMismatchError("Lamb-shift dimension differs from base Hamiltonian")
            object.__setattr__(self, "lamb_shift", shift)

    @property
    def dim(self) -> int:
        return self.base.shape[0]

    @property
    def is_static(self) -> bool:
        return not self.drives

    def evaluate(self, t: float) -> HermitianMatrix:
        h = np.array(self.base, dtype=complex)
        if self.lamb_shift is not None:
            h = h + self.lamb_shift
        for term in self.drives:
            h = h + term.schedule(t) * term.operator
        return h

    def evaluate_dot(self, t: float) -> HermitianMatrix:
        hdot = np.zeros((self.dim, self.dim), dtype=complex)
        for term in self.drives:
            hdot = hdot + term.schedule.derivative(t) * term.operator
        return hdot


@dataclass(frozen=True)
class JumpTerm:
    """
    Dissipative channel with rate c >= 0 (1/time) and operator L.

    An optional modulation m(t) >= 0 makes the rate c * m(t).
    """

    rate: float
    operator: ComplexMatrix
    modulation: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        if not np.isfinite(self.rate) or self.rate < 0:
            raise InputValidationError("Jump rates must be finite and non-negative", [f"rate={self.rate}"])
        object.__setattr__(self, "operator", as_matrix(self.operator))

    def rate_at(self, t: float) -> float:
        if self.modulation is None:
            return self.rate
        return self.rate * float(self.modulation(t))


@dataclass(frozen=True)
class LindbladGenerator:
    """rho_dot = -i[H(t), rho] + sum_a c_a (L rho L^dagger - {L^dagger L, rho}/2)."""

    hamiltonian: HamiltonianSchedule
    jumps: Tuple[JumpTerm, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for i, jump in enumerate(self.jumps):
            if jump.operator.shape[0] != self.dim:
                raise DimensionMismatchError(
                    "Jump operator dimension differs from Hamiltonian", [f"jump {i}: {jump.operator.shape}"]
                )

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim

    @property
    def is_unitary(self) -> bool:
        return all(j.rate == 0 for j in self.jumps)

    def dissipator(self, rho: ComplexMatrix, t: float = 0.0) -> ComplexMatrix:
        out = np.zeros_like(rho, dtype=complex)
        for jump in self.jumps:
            rate = jump.rate_at(t)
            if rate == 0:
                continue
            l = jump.operator
            ld = l.conj().T
            ldl = ld @ l
            out += rate * (l @ rho @ ld - 0.5 * (ldl @ rho + rho @ ldl))
        return out

    def rhs(self, rho: ComplexMatrix, t: float) -> ComplexMatrix:
        """Unchecked right-hand side used inside the integrator."""
        return -1j * commutator(self.hamiltonian.evaluate(t), rho) + self.dissipator(rho, t)


def apply_generator(gen: LindbladGenerator, rho: DensityMatrix, t: float) -> HermitianMatrix:
    """Evaluate rho_dot = L(t)[rho]; output is Hermitian and traceless."""
    rho = as_matrix(rho)
    if rho.shape[0] != gen.dim:
        raise DimensionMismatchError(
            "State dimension differs from generator", [f"state {rho.shape[0]}, generator {gen.dim}"]
        )
    return hermitize(gen.rhs(rho, t))


def damped_qubit_generator(
    gamma: float,
    omega0: float,
    convention: Convention = "sz",
    ramp_rate: float = 0.0,
    lamb_shift: Optional[HermitianMatrix] = None,
) -> LindbladGenerator:
    """
    Two-level atom in a Markovian bath: H = s*omega(t)*sigma_z with a single
    sigma_x jump of rate gamma, i.e. rho_dot = -i[H, rho] + gamma(sigma_x rho sigma_x - rho).

    s is 1 or 1/2 by convention; omega(t) = omega0 + ramp_rate*t.
    gamma = 0 yields a purely unitary generator.
    """
    if not np.isfinite(gamma) or gamma < 0:
        raise InputValidationError("Damping rate must be non-negative", [f"gamma={gamma}"])
    if not np.isfinite(omega0) or omega0 <= 0:
        raise InputValidationError("Frequency must be positive", [f"omega0={omega0}"])
    scale = convention_scale(convention)
    if ramp_rate:
        schedule = HamiltonianSchedule(
            base=np.zeros((2, 2), dtype=complex),
            drives=(DriveTerm("omega", scale * SIGMA_Z, PiecewisePolynomial.linear(omega0, ramp_rate)),),
            lamb_shift=lamb_shift,
        )
    else:
        schedule = HamiltonianSchedule(base=scale * omega0 * SIGMA_Z, lamb_shift=lamb_shift)
    jumps = (JumpTerm(gamma, SIGMA_X),) if gamma > 0 else ()
    return LindbladGenerator(hamiltonian=schedule, jumps=jumps)


def thermal_qubit_generator(
    gamma: float,
    omega0: float,
    beta: float,
    convention: Convention = "sz",
    ramp_rate: float = 0.0,
) -> LindbladGenerator:
    """
    Amplitude damping with detailed balance at beta for the instantaneous gap.

    With H = s*omega(t)*sigma_z the excited level is |0>; decay |0> -> |1> has rate
    gamma and excitation gamma*exp(-2*beta*s*omega(t)), so the Gibbs state of H(t)
    is the instantaneous steady state.
    """
    if gamma <= 0 or omega0 <= 0 or beta <= 0:
        raise InputValidationError(
            "Thermal generator needs positive parameters", [f"gamma={gamma}, omega0={omega0}, beta={beta}"]
        )
    base = damped_qubit_generator(gamma, omega0, convention, ramp_rate)
    scale = 2.0 * convention_scale(convention)

    def boltzmann(t: float) -> float:
        return float(np.exp(-beta * scale * (omega0 + ramp_rate * t)))

    jumps = (JumpTerm(gamma, SIGMA_MINUS), JumpTerm(gamma, SIGMA_PLUS, boltzmann))
    return LindbladGenerator(hamiltonian=base.hamiltonian, jumps=jumps)


def build_generator(
    base: HermitianMatrix,
    drives: Sequence[Tuple[str, HermitianMatrix, PiecewisePolynomial]] = (),
    jumps: Sequence[Tuple[float, ComplexMatrix]] = (),
    lamb_shift: Optional[HermitianMatrix] = None,
) -> LindbladGenerator:
    """Assemble a generator from plain parts (used by config deserialization)."""
    schedule = HamiltonianSchedule(
        base=base,
        drives=tuple(DriveTerm(name, op, sched) for name, op, sched in drives),
        lamb_shift=lamb_shift,
    )
    return LindbladGenerator(hamiltonian=schedule, jumps=tuple(JumpTerm(rate, op) for rate, op in jumps))


def static_hamiltonian(h: HermitianMatrix) -> HamiltonianSchedule:
    return HamiltonianSchedule(base=h)
