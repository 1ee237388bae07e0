"""
Dense Hermitian Linear Algebra
Validation, cyclic-Jacobi eigendecomposition, entropies and Gibbs states for small
dense complex matrices (natural units, hbar = k_B = 1).
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import numpy.typing as npt
from scipy.special import logsumexp

from trajthermo.core.config import ENTROPY_FLOOR, EPS_RANK
from trajthermo.core.exceptions import (
    ConvergenceError,
    DimensionMismatchError,
    InputValidationError,
    NumericalConsistencyError,
    SupportError,
)
from trajthermo.core.logging import get_logger


logger = get_logger(__name__)

ComplexMatrix = npt.NDArray[np.complex128]
# Aliases document intent; validation happens in the constructors below.
HermitianMatrix = ComplexMatrix
DensityMatrix = ComplexMatrix

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-12
TIE_TOL = 1e-12

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |1><0|
IDENTITY_2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues with orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def reconstruct(self) -> ComplexMatrix:
        return (self.vectors * self.values) @ self.vectors.conj().T

    def reconstruction_residual(self, matrix: ComplexMatrix) -> float:
        return float(np.max(np.abs(self.reconstruct() - matrix)))

    def orthonormality_residual(self) -> float:
        gram = self.vectors.conj().T @ self.vectors
        return float(np.max(np.abs(gram - np.eye(self.dim))))


def as_matrix(m) -> ComplexMatrix:
    """Coerce input to a square complex128 array."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise InputValidationError("Matrix must be square with dimension >= 1", [f"shape {arr.shape}"])
    if not np.all(np.isfinite(arr)):
        raise InputValidationError("Matrix contains non-finite entries")
    return arr


def dagger(m: ComplexMatrix) -> ComplexMatrix:
    return m.conj().T


def hermitize(m: ComplexMatrix) -> ComplexMatrix:
    return 0.5 * (m + m.conj().T)


def commutator(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    return a @ b - b @ a


def anticommutator(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    return a @ b + b @ a


def hermiticity_residual(m: ComplexMatrix) -> float:
    return float(np.max(np.abs(m - m.conj().T)))


def is_hermitian(m: ComplexMatrix) -> bool:
    return hermiticity_residual(m) <= HERMITICITY_TOL * (1.0 + float(np.max(np.abs(m))))


def check_same_dim(*matrices: ComplexMatrix) -> int:
    dims = {m.shape[0] for m in matrices}
    if len(dims) != 1:
        raise DimensionMismatchError("Matrix dimensions disagree", [f"dimensions {sorted(dims)}"])
    return dims.pop()


def real_trace(m: ComplexMatrix, tol: float = 1e-10, what: str = "trace") -> float:
    """Trace that must be real; the imaginary residue is checked then discarded."""
    value = complex(np.trace(m))
    if abs(value.imag) > tol:
        raise NumericalConsistencyError(
            f"Imaginary residue {value.imag:.3e} in {what} exceeds {tol:.1e}", {"quantity": what}
        )
    return value.real


def validate_hermitian(m) -> HermitianMatrix:
    """Return a read-only Hermitian matrix or raise with the residual."""
    arr = as_matrix(m)
    if not is_hermitian(arr):
        raise InputValidationError(
            "Matrix is not Hermitian", [f"max |M - M^dagger| = {hermiticity_residual(arr):.3e}"]
        )
    out = arr.copy()
    out.flags.writeable = False
    return out


def _fix_phases(vectors: ComplexMatrix) -> ComplexMatrix:
    """Make the largest-magnitude component of each column real positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    return vectors * (np.abs(pivots) / pivots)


def _order(values: np.ndarray, vectors: ComplexMatrix) -> np.ndarray:
    """Ascending order; near-ties broken lexicographically on phase-fixed components."""
    order = list(np.argsort(values, kind="stable"))
    scale = TIE_TOL * (1.0 + float(np.max(np.abs(values))))
    result: List[int] = []
    i = 0
    while i < len(order):
        j = i + 1
        while j < len(order) and values[order[j]] - values[order[j - 1]] <= scale:
            j += 1
        group = order[i:j]
        if len(group) > 1:
            group = sorted(
                group,
                key=lambda k: tuple(c for z in vectors[:, k] for c in (round(z.real, 12), round(z.imag, 12))),
            )
        result.extend(group)
        i = j
    return np.array(result, dtype=int)


def _jacobi(a: ComplexMatrix, max_sweeps: int) -> Tuple[np.ndarray, ComplexMatrix]:
    """Cyclic complex Jacobi; each rotation zeroes one off-diagonal pair."""
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    norm = np.linalg.norm(a)
    if n == 1 or norm == 0.0:
        return np.real(np.diag(a)).copy(), v
    target = 1e-14 * norm
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off < target:
            return np.real(np.diag(a)).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                phase = apq / mag
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                g = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ g
    off = np.linalg.norm(a - np.diag(np.diag(a)))
    if off < 1e-12 * norm:
        logger.warning("Jacobi stopped short of target", off_norm=float(off), target=float(target))
        return np.real(np.diag(a)).copy(), v
    raise ConvergenceError(
        f"Jacobi eigensolver did not converge in {max_sweeps} sweeps", {"off_norm": float(off)}
    )


def hermitian_eigendecompose(m, max_sweeps: int = 100) -> EigenDecomposition:
    """
    Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ascending eigenvalues and orthonormal eigenvectors (columns) with
    deterministic phases: the largest-magnitude component of each column is
    real positive. Ties are broken by comparing the phase-fixed components.
    """
    h = validate_hermitian(m)
    values, vectors = _jacobi(hermitize(h).astype(complex), max_sweeps)
    vectors = _fix_phases(vectors)
    order = _order(values, vectors)
    values = values[order]
    vectors = vectors[:, order]
    values.flags.writeable = False
    vectors.flags.writeable = False
    return EigenDecomposition(values=values, vectors=vectors)


def density_issues(m: ComplexMatrix) -> List[str]:
    """List every violated density-matrix invariant (empty when valid)."""
    issues: List[str] = []
    scale = 1.0 + float(np.max(np.abs(m)))
    herm = hermiticity_residual(m)
    if herm > HERMITICITY_TOL * scale:
        issues.append(f"not Hermitian (max |M - M^dagger| = {herm:.3e})")
    trace = complex(np.trace(m))
    if abs(trace - 1.0) > TRACE_TOL:
        issues.append(f"trace {trace.real:.12g}{trace.imag:+.3g}j differs from 1")
    min_eig = float(hermitian_eigendecompose(hermitize(m)).values[0])
    if min_eig < -POSITIVITY_TOL:
        issues.append(f"not positive semidefinite (min eigenvalue {min_eig:.3e})")
    return issues


def validate_density(m, label: Optional[str] = None) -> DensityMatrix:
    """Return a read-only density matrix or raise listing every violated invariant."""
    arr = as_matrix(m)
    issues = density_issues(arr)
    if issues:
        prefix = f"Invalid density matrix{f' ({label})' if label else ''}"
        raise InputValidationError(prefix, issues)
    out = arr.copy()
    out.flags.writeable = False
    return out


def matrix_rank(rho: DensityMatrix, eps: float = EPS_RANK) -> int:
    return int(np.sum(hermitian_eigendecompose(rho).values > eps))


def _xlogx(values: np.ndarray) -> np.ndarray:
    safe = np.where(values > ENTROPY_FLOOR, values, 1.0)
    return np.where(values > ENTROPY_FLOOR, values * np.log(safe), 0.0)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """S = -Tr[rho ln rho] in nats, clipped into [0, ln d]."""
    r = hermitian_eigendecompose(rho).values
    s = -float(np.sum(_xlogx(r)))
    return min(max(s, 0.0), float(np.log(r.shape[0])))


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """
    Quantum relative entropy S(rho||sigma) = Tr[rho ln rho - rho ln sigma].

    Raises SupportError when rho has weight outside the support of sigma.
    """
    check_same_dim(rho, sigma)
    r = hermitian_eigendecompose(rho).values
    sig = hermitian_eigendecompose(sigma)
    weights = np.real(np.einsum("ij,ik,kj->j", sig.vectors.conj(), rho, sig.vectors))
    outside = sig.values <= EPS_RANK
    leaked = float(np.sum(weights[outside])) if np.any(outside) else 0.0
    if leaked > EPS_RANK:
        raise SupportError(
            "support(rho) is not contained in support(sigma)", {"weight_outside_support": leaked}
        )
    cross = float(np.sum(weights[~outside] * np.log(sig.values[~outside])))
    value = float(np.sum(_xlogx(r))) - cross
    return max(value, 0.0)


def log_partition(h: HermitianMatrix, beta: float) -> Tuple[float, EigenDecomposition]:
    """ln Tr[exp(-beta H)] evaluated stably, together with the eigendata of H."""
    eig = hermitian_eigendecompose(h)
    return float(logsumexp(-beta * eig.values)), eig


def gibbs_state(h, beta: float) -> DensityMatrix:
    """Canonical state exp(-beta H)/Tr[exp(-beta H)] for finite beta > 0."""
    if not np.isfinite(beta) or beta <= 0:
        raise InputValidationError("Inverse temperature must be finite and positive", [f"beta={beta}"])
    log_z, eig = log_partition(h, beta)
    weights = np.exp(-beta * eig.values - log_z)
    rho = (eig.vectors * weights) @ eig.vectors.conj().T
    return hermitize(rho)


def expectation(op: ComplexMatrix, rho: DensityMatrix, tol: float = 1e-10) -> float:
    return real_trace(op @ rho, tol=tol, what="expectation value")
