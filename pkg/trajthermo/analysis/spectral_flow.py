"""
Spectral Flow
Matched eigendecomposition of rho(t) along a trajectory with eigenvalue rates and
eigenvector couplings from first-order perturbation theory in rho_dot.
"""

import time
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from trajthermo.core.config import EPS_DEG, EPS_RANK
from trajthermo.core.exceptions import DimensionMismatchError, RankChangeError
from trajthermo.core.logging import get_logger, perf_logger
from trajthermo.dynamics.linalg import (
    ComplexMatrix,
    DensityMatrix,
    EigenDecomposition,
    HermitianMatrix,
    check_same_dim,
    hermitian_eigendecompose,
    hermitize,
)
from trajthermo.dynamics.propagator import Trajectory


logger = get_logger(__name__)

CROSSING_OVERLAP = 0.5


def degeneracy_partition(values: np.ndarray, eps_deg: float = EPS_DEG) -> List[List[int]]:
    """Group indices whose eigenvalues chain together within eps_deg."""
    order = np.argsort(values, kind="stable")
    groups: List[List[int]] = [[int(order[0])]]
    for prev, cur in zip(order, order[1:]):
        if values[cur] - values[prev] < eps_deg:
            groups[-1].append(int(cur))
        else:
            groups.append([int(cur)])
    return [sorted(g) for g in groups]


def group_labels(groups: List[List[int]], dim: int) -> np.ndarray:
    labels = np.empty(dim, dtype=int)
    for g, members in enumerate(groups):
        labels[members] = g
    return labels


def block_diagonalize(
    vectors: ComplexMatrix, perturbation: HermitianMatrix, groups: List[List[int]]
) -> ComplexMatrix:
    """Rotate each degenerate block so the projected perturbation is diagonal."""
    vectors = np.array(vectors, dtype=complex)
    for members in groups:
        if len(members) < 2:
            continue
        block = vectors[:, members]
        projected = hermitize(block.conj().T @ perturbation @ block)
        vectors[:, members] = block @ hermitian_eigendecompose(projected).vectors
    return vectors


def perturbative_couplings(
    values: np.ndarray, projected: ComplexMatrix, labels: np.ndarray
) -> ComplexMatrix:
    """K[j, k] = P[j, k] / (r_k - r_j) across groups, zero inside a group."""
    gaps = values[np.newaxis, :] - values[:, np.newaxis]
    across = labels[:, np.newaxis] != labels[np.newaxis, :]
    safe = np.where(across, gaps, 1.0)
    return np.where(across, projected / safe, 0.0)


@dataclass(frozen=True)
class SpectralFrame:
    """
    Eigendata of rho at one time together with its rates.

    r[k], V[:, k]: eigenvalues and eigenvectors in matched order.
    rdot[k] = <r_k|rho_dot|r_k>.
    K[j, k] = <r_j|d/dt r_k> in the parallel-transport gauge (K[k, k] = 0).
    """

    t: float
    rho: DensityMatrix
    rhodot: HermitianMatrix
    r: np.ndarray
    V: ComplexMatrix
    rdot: np.ndarray
    K: ComplexMatrix
    groups: Tuple[Tuple[int, ...], ...]
    eps_rank: float = EPS_RANK

    @property
    def dim(self) -> int:
        return self.r.shape[0]

    @property
    def rank(self) -> int:
        return int(np.sum(self.r > self.eps_rank))

    @property
    def min_eigenvalue(self) -> float:
        return float(np.min(self.r))

    def in_basis(self, op: ComplexMatrix) -> ComplexMatrix:
        """Matrix elements <r_j|op|r_k>."""
        return self.V.conj().T @ op @ self.V

    def from_basis(self, m: ComplexMatrix) -> ComplexMatrix:
        return self.V @ m @ self.V.conj().T

    def eigenvector_derivatives(self) -> ComplexMatrix:
        """Columns |d/dt r_k> = sum_j K[j, k] |r_j>."""
        return self.V @ self.K

    def rephased(self, phases: np.ndarray) -> "SpectralFrame":
        """Same frame with |r_k> -> phases[k] |r_k> (K transforms covariantly)."""
        phases = np.asarray(phases, dtype=complex)
        k_new = np.conj(phases)[:, np.newaxis] * self.K * phases[np.newaxis, :]
        return replace(self, V=self.V * phases[np.newaxis, :], K=k_new)

    def flow_residual(self) -> float:
        """max |sum rdot_k P_k + sum_k r_k(|dr_k><r_k| + h.c.) - rho_dot|."""
        dv = self.eigenvector_derivatives()
        rebuilt = (self.V * self.rdot) @ self.V.conj().T
        rebuilt = rebuilt + (dv * self.r) @ self.V.conj().T + (self.V * self.r) @ dv.conj().T
        return float(np.max(np.abs(rebuilt - self.rhodot)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t": self.t,
            "eigenvalues": self.r.tolist(),
            "eigenvalue_rates": self.rdot.tolist(),
            "rank": self.rank,
            "degeneracy_groups": [list(g) for g in self.groups],
        }


def spectral_frame(
    rho: DensityMatrix,
    rhodot: HermitianMatrix,
    eps_deg: float = EPS_DEG,
    t: float = 0.0,
    decomposition: Optional[EigenDecomposition] = None,
) -> SpectralFrame:
    """
    Eigenvalue rates and eigenvector couplings of rho from rho_dot.

    Uses first-order perturbation theory instead of differencing eigenvectors.
    Degenerate eigenvalues (closer than eps_deg) are grouped; inside each
    group the eigenvectors are rotated to diagonalize the projected rho_dot and
    their mutual couplings are set to zero.
    """
    rho = np.asarray(rho, dtype=complex)
    rhodot = np.asarray(rhodot, dtype=complex)
    check_same_dim(rho, rhodot)
    eig = decomposition if decomposition is not None else hermitian_eigendecompose(rho)
    values = np.array(eig.values, dtype=float)
    groups = degeneracy_partition(values, eps_deg)
    vectors = block_diagonalize(eig.vectors, rhodot, groups)
    projected = vectors.conj().T @ rhodot @ vectors
    rdot = np.real(np.diag(projected)).copy()
    couplings = perturbative_couplings(values, projected, group_labels(groups, values.size))
    np.fill_diagonal(couplings, 0.0)
    return SpectralFrame(
        t=float(t),
        rho=rho,
        rhodot=rhodot,
        r=values,
        V=vectors,
        rdot=rdot,
        K=couplings,
        groups=tuple(tuple(g) for g in groups),
    )


@dataclass(frozen=True)
class FrameMatch:
    """Permutation and unit phases aligning a raw decomposition to a previous frame."""

    permutation: np.ndarray
    phases: np.ndarray
    overlaps: np.ndarray

    def apply(self, raw: EigenDecomposition) -> EigenDecomposition:
        values = np.array(raw.values)[self.permutation]
        vectors = np.array(raw.vectors)[:, self.permutation] * self.phases[np.newaxis, :]
        return EigenDecomposition(values=values, vectors=vectors)


def match_frames(prev: SpectralFrame, next_raw: EigenDecomposition) -> FrameMatch:
    """
    Greedy overlap matching: pairs are taken by descending |<prev_k|next_l>|^2,
    then each matched vector is re-phased so <prev_k|next_k> is real positive.
    """
    if prev.dim != next_raw.dim:
        raise DimensionMismatchError(
            "Frames to match must have the same dimension", [f"previous {prev.dim}, next {next_raw.dim}"]
        )
    amplitudes = prev.V.conj().T @ next_raw.vectors
    weights = np.abs(amplitudes) ** 2
    dim = prev.dim
    permutation = np.full(dim, -1, dtype=int)
    used = np.zeros(dim, dtype=bool)
    # Stable ordering keeps ties deterministic
    for flat in np.argsort(-weights, axis=None, kind="stable"):
        k, l = divmod(int(flat), dim)
        if permutation[k] >= 0 or used[l]:
            continue
        permutation[k] = l
        used[l] = True
    matched = amplitudes[np.arange(dim), permutation]
    magnitude = np.abs(matched)
    phases = np.where(magnitude > 0, np.conj(matched) / np.where(magnitude > 0, magnitude, 1.0), 1.0)
    return FrameMatch(permutation=permutation, phases=phases.astype(complex), overlaps=magnitude)


@dataclass
class SpectralFlow:
    """Frames aligned with trajectory points plus the matching log."""

    frames: List[SpectralFrame]
    matching_log: List[Dict[str, Any]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, i: int) -> SpectralFrame:
        return self.frames[i]

    @property
    def crossings(self) -> List[Dict[str, Any]]:
        return [entry for entry in self.matching_log if entry["min_overlap"] < CROSSING_OVERLAP]

    @property
    def min_overlap(self) -> float:
        if not self.matching_log:
            return 1.0
        return float(min(entry["min_overlap"] for entry in self.matching_log))

    def eigenvalues(self) -> np.ndarray:
        return np.stack([f.r for f in self.frames])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "frames": [f.to_dict() for f in self.frames],
            "matching_log": self.matching_log,
        }


def spectral_flow(
    traj: Trajectory,
    eps_deg: float = EPS_DEG,
    eps_rank: float = EPS_RANK,
) -> SpectralFlow:
    """
    Frames for every trajectory point with labels continued by eigenvector overlap.

    The rank of rho must stay constant along the trajectory.
    """
    start = time.time()
    frames: List[SpectralFrame] = []
    log: List[Dict[str, Any]] = []
    for point in traj:
        raw = hermitian_eigendecompose(point.state)
        if frames:
            match = match_frames(frames[-1], raw)
            raw = match.apply(raw)
            entry = {
                "t": point.t,
                "permutation": match.permutation.tolist(),
                "phases": np.angle(match.phases).tolist(),
                "min_overlap": float(np.min(match.overlaps)),
                "identity": bool(np.array_equal(match.permutation, np.arange(raw.dim))),
            }
            log.append(entry)
            if entry["min_overlap"] < CROSSING_OVERLAP:
                logger.warning("Weak frame overlap (possible crossing)", t=point.t, overlap=entry["min_overlap"])
        frame = replace(spectral_frame(point.state, point.rhodot, eps_deg, point.t, raw), eps_rank=eps_rank)
        frames.append(frame)

    ranks = {f.rank for f in frames}
    if len(ranks) > 1:
        changes = [f.t for a, f in zip(frames, frames[1:]) if f.rank != a.rank]
        raise RankChangeError(
            "Rank of rho changes along the trajectory",
            {"ranks": sorted(ranks), "first_change_t": changes[0]},
        )
    perf_logger.log_stage_time("spectral_flow", time.time() - start, len(frames))
    return SpectralFlow(frames=frames, matching_log=log)
