"""
Trajectory-Based Shortcut to Adiabaticity
Virtual Hamiltonian, geometric counterdiabatic term, counterdiabatic dissipator and the
audit that they regenerate rho_dot along the trajectory.
"""

from dataclasses import dataclass
from typing import Any, Dict, Literal, Tuple

import numpy as np

from trajthermo.core.config import EPS_RANK
from trajthermo.core.exceptions import InputValidationError, RankDeficiencyError
from trajthermo.dynamics.linalg import (
    ComplexMatrix,
    DensityMatrix,
    HermitianMatrix,
    commutator,
    hermitize,
)
from trajthermo.analysis.spectral_flow import SpectralFrame


@dataclass(frozen=True)
class VirtualHamiltonian:
    """Operator whose Gibbs state at beta is rho: eps_k = -ln(r_k * z)/beta."""

    matrix: HermitianMatrix
    levels: np.ndarray
    partition: float
    beta: float

    def gibbs_reconstruction(self, frame: SpectralFrame) -> DensityMatrix:
        weights = np.exp(-self.beta * self.levels)
        return frame.from_basis(np.diag(weights / np.sum(weights)))


@dataclass(frozen=True)
class CDGenerator:
    """
    Counterdiabatic generator of a frame.

    H_cd = virtual Hamiltonian + h_geo; rates[k, j] = rdot_k / (g r_j) are the
    rates of the jumps |r_k><r_j| with g the (constant, full) rank.
    """

    H_cd: HermitianMatrix
    h_geo: HermitianMatrix
    rates: np.ndarray

    def to_dict(self) -> Dict[str, Any]:
        return {
            "H_cd": self.H_cd,
            "h_geo": self.h_geo,
            "rates": self.rates.tolist(),
        }


def ensure_full_rank(frame: SpectralFrame, eps_rank: float = EPS_RANK) -> None:
    k = int(np.argmin(frame.r))
    if frame.r[k] <= eps_rank:
        raise RankDeficiencyError(float(frame.r[k]), frame.t, k)


def regularize(rho: DensityMatrix, rhodot: HermitianMatrix, delta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Mix with the maximally mixed state: ((1-delta) rho + delta I/d, (1-delta) rho_dot)."""
    if not 0.0 <= delta < 1.0:
        raise InputValidationError("Regularization delta must lie in [0, 1)", [f"delta={delta}"])
    d = rho.shape[-1]
    return (1.0 - delta) * rho + delta * np.eye(d) / d, (1.0 - delta) * rhodot


def virtual_hamiltonian(
    frame: SpectralFrame, beta: float, partition: float = 1.0, eps_rank: float = EPS_RANK
) -> VirtualHamiltonian:
    """
    Virtual Hamiltonian of a full-rank frame.

    The partition value z is a gauge: any z > 0 is self-consistent
    (Tr exp(-beta H) = z) and only shifts the matrix by a multiple of identity.
    """
    if not np.isfinite(beta) or beta <= 0:
        raise InputValidationError("Inverse temperature must be finite and positive", [f"beta={beta}"])
    if partition <= 0:
        raise InputValidationError("Partition gauge must be positive", [f"z={partition}"])
    ensure_full_rank(frame, eps_rank)
    levels = -np.log(frame.r * partition) / beta
    return VirtualHamiltonian(
        matrix=hermitize(frame.from_basis(np.diag(levels))),
        levels=levels,
        partition=float(partition),
        beta=float(beta),
    )


def cd_geometric_term(frame: SpectralFrame) -> HermitianMatrix:
    """h = i sum_{j != k} K[j, k] |r_j><r_k|, zero on the diagonal of the eigenbasis."""
    return hermitize(frame.from_basis(1j * frame.K))


def cd_rates(frame: SpectralFrame, eps_rank: float = EPS_RANK) -> np.ndarray:
    ensure_full_rank(frame, eps_rank)
    g = frame.dim
    return frame.rdot[:, np.newaxis] / (g * frame.r[np.newaxis, :])


def cd_generator(frame: SpectralFrame, vh: VirtualHamiltonian, eps_rank: float = EPS_RANK) -> CDGenerator:
    h_geo = cd_geometric_term(frame)
    return CDGenerator(H_cd=hermitize(vh.matrix + h_geo), h_geo=h_geo, rates=cd_rates(frame, eps_rank))


def cd_dissipator_apply(
    frame: SpectralFrame,
    X: ComplexMatrix,
    part: Literal["full", "jump", "anticommutator"] = "full",
    eps_rank: float = EPS_RANK,
) -> HermitianMatrix:
    """
    sum_kj c_kj (L_kj X L_kj^dagger - {L_kj^dagger L_kj, X}/2) with L_kj = |r_k><r_j|.

    Evaluated in the eigenbasis: the jump part feeds X_jj into level k, the
    anticommutator part scales X_jk by -(a_j + a_k)/2 with a_j = sum_k c_kj.
    """
    rates = cd_rates(frame, eps_rank)
    x = frame.in_basis(np.asarray(X, dtype=complex))
    out = np.zeros_like(x)
    if part in ("full", "jump"):
        out += np.diag(rates @ np.diag(x))
    if part in ("full", "anticommutator"):
        a = np.sum(rates, axis=0)
        out -= 0.5 * (a[:, np.newaxis] + a[np.newaxis, :]) * x
    return frame.from_basis(out)


def reconstruct_rhodot(
    frame: SpectralFrame, vh: VirtualHamiltonian, cd: CDGenerator
) -> Tuple[HermitianMatrix, float]:
    """-i[H_cd, rho] + D_cd[rho] and its max-norm distance to the frame's rho_dot."""
    rebuilt = -1j * commutator(cd.H_cd, frame.rho) + cd_dissipator_apply(frame, frame.rho)
    rebuilt = hermitize(rebuilt)
    return rebuilt, float(np.max(np.abs(rebuilt - frame.rhodot)))
