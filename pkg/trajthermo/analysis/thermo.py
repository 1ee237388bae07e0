"""
Thermodynamic Ledger
Conventional, trajectory-based and semiclassical heat/work rates, entropy rates,
the relative-entropy identity and the entropy-production bound.
"""

import time
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid, simpson

from trajthermo.core.config import EPS_DEG, EPS_RANK, Tolerances
from trajthermo.core.exceptions import InputValidationError
from trajthermo.core.logging import get_logger, perf_logger
from trajthermo.dynamics.generators import HamiltonianSchedule
from trajthermo.dynamics.linalg import (
    ComplexMatrix,
    HermitianMatrix,
    commutator,
    expectation,
    gibbs_state,
    hermitian_eigendecompose,
    log_partition,
    real_trace,
    relative_entropy,
    von_neumann_entropy,
)
from trajthermo.dynamics.propagator import Trajectory
from trajthermo.analysis.spectral_flow import (
    SpectralFlow,
    SpectralFrame,
    block_diagonalize,
    degeneracy_partition,
    group_labels,
    perturbative_couplings,
)
from trajthermo.analysis.tbsta import (
    VirtualHamiltonian,
    cd_generator,
    reconstruct_rhodot,
    virtual_hamiltonian,
)


logger = get_logger(__name__)

CSV_COLUMNS = [
    "t", "U", "Qdot_conv", "Wdot_conv", "Qdot_tbsta", "Wdot_tbsta", "Wdot_cd", "Sdot", "Sirdot",
    "qdot_sc", "wdot_sc", "cum_U", "cum_Q_tbsta", "cum_W_tbsta", "cum_Wcd", "cum_S", "cum_Sir",
    "res_firstlaw", "res_reconstruction", "res_relative_entropy",
]

RATE_FIELDS = [
    "Udot", "Qdot_conv", "Wdot_conv", "Qdot_tbsta", "Wdot_tbsta", "Wdot_cd",
    "Sdot", "Sirdot", "qdot_sc", "wdot_sc",
]


@dataclass(frozen=True)
class TBSTARates:
    Qdot_tbsta: float
    Wdot_cd: float
    Wdot_tbsta: float
    wcd_route_residual: float


@dataclass(frozen=True)
class EntropyRates:
    Sdot: float
    Sirdot: float
    route_residual: float


@dataclass(frozen=True)
class RelativeEntropyRate:
    """Spectral expansion of d/dt S(rho||rho_eq) and the work-gap Tr[(rho - rho_eq) H_dot]."""

    value: float
    rate: float
    work_gap: float


@dataclass(frozen=True)
class IdentityCheck:
    residual: float
    residual_flipped_sign: float
    relative_entropy: RelativeEntropyRate


@dataclass(frozen=True)
class SemiclassicalRates:
    qdot: float
    wdot: float
    rotation_weighted: float
    rotation_unweighted: float


@dataclass
class ThermoRates:
    """Every rate at one grid point (energy/time; entropies in nats/time)."""

    t: float
    U: float
    S: float
    Udot: float
    Qdot_conv: float
    Wdot_conv: float
    Qdot_tbsta: float
    Wdot_tbsta: float
    Wdot_cd: float
    Sdot: float
    Sirdot: float
    qdot_sc: float
    wdot_sc: float
    rel_entropy: float
    rel_entropy_rate: float
    work_gap: float
    identity_residuals: Dict[str, float] = field(default_factory=dict)


def conventional_rates(
    rho: ComplexMatrix, rhodot: ComplexMatrix, H: HermitianMatrix, Hdot: HermitianMatrix, tol: float = 1e-10
) -> Tuple[float, float, float]:
    """(Q_dot, W_dot, U_dot) = (Tr[rho_dot H], Tr[rho H_dot], d/dt Tr[rho H])."""
    qdot = real_trace(rhodot @ H, tol, "conventional heat rate")
    wdot = real_trace(rho @ Hdot, tol, "conventional work rate")
    udot = real_trace(rhodot @ H + rho @ Hdot, tol, "internal energy rate")
    return qdot, wdot, udot


def tbsta_rates(
    frame: SpectralFrame,
    H: HermitianMatrix,
    Hdot: HermitianMatrix,
    H_cd: Optional[HermitianMatrix] = None,
    tol: float = 1e-10,
) -> TBSTARates:
    """
    Heat from eigenvalue flow and dissipative CD work from eigenvector flow.

    Qdot = sum_k rdot_k <r_k|H|r_k>; Wdot_cd = sum_k r_k 2Re<r_k|H|dr_k>,
    cross-checked against -i Tr[[H, H_cd] rho] when H_cd is supplied.
    """
    h = frame.in_basis(H)
    qdot = float(np.sum(frame.rdot * np.real(np.diag(h))))
    # <r_k|H|dr_k> = sum_j H[k, j] K[j, k]
    wcd = float(np.sum(frame.r * 2.0 * np.real(np.einsum("kj,jk->k", h, frame.K))))
    route = 0.0
    if H_cd is not None:
        alt = real_trace(-1j * commutator(H, H_cd) @ frame.rho, tol, "CD work")
        route = abs(alt - wcd)
    wdot = real_trace(frame.rho @ Hdot, tol, "conventional work rate") + wcd
    return TBSTARates(Qdot_tbsta=qdot, Wdot_cd=wcd, Wdot_tbsta=wdot, wcd_route_residual=route)


def entropy_rates(
    frame: SpectralFrame,
    H: HermitianMatrix,
    beta: float,
    partition: float = 1.0,
    vh: Optional[VirtualHamiltonian] = None,
) -> EntropyRates:
    """
    Sdot = -sum_k rdot_k ln r_k and Sirdot = Sdot - beta Qdot, the latter also
    as beta sum_k rdot_k <r_k|(H_virtual - H)|r_k>. A precomputed vh must belong
    to the same frame and beta.
    """
    if vh is None:
        vh = virtual_hamiltonian(frame, beta, partition)
    sdot = -float(np.sum(frame.rdot * np.log(frame.r)))
    h_diag = np.real(np.diag(frame.in_basis(H)))
    qdot = float(np.sum(frame.rdot * h_diag))
    sir = sdot - beta * qdot
    sir_rhs = beta * float(np.sum(frame.rdot * (vh.levels - h_diag)))
    return EntropyRates(Sdot=sdot, Sirdot=sir, route_residual=abs(sir - sir_rhs))


def relative_entropy_rate(frame: SpectralFrame, H: HermitianMatrix, Hdot: HermitianMatrix, beta: float) -> RelativeEntropyRate:
    """
    d/dt S(rho||rho_eq) with rho_eq the instantaneous Gibbs state of H at beta,
    expanded over the spectral frame:

        sum_k rdot_k (ln r_k - <r_k|ln rho_eq|r_k>) - sum_k r_k 2Re<r_k|ln rho_eq|dr_k>
        + beta Tr[rho H_dot] + Z_dot/Z,  Z_dot/Z = -beta Tr[H_dot rho_eq].

    beta = 0 is allowed: rho_eq = I/d and the rate reduces to -Sdot.
    """
    d = frame.dim
    if beta == 0:
        log_eq = -np.log(d) * np.eye(d)
        rho_eq = np.eye(d) / d
    else:
        log_z, eig = log_partition(H, beta)
        log_eq = -beta * np.asarray(H) - log_z * np.eye(d)
        rho_eq = (eig.vectors * np.exp(-beta * eig.values - log_z)) @ eig.vectors.conj().T
    l = frame.in_basis(log_eq)
    ln_r = np.log(frame.r)
    rate = float(np.sum(frame.rdot * (ln_r - np.real(np.diag(l)))))
    rate -= float(np.sum(frame.r * 2.0 * np.real(np.einsum("kj,jk->k", l, frame.K))))
    rate += beta * real_trace(frame.rho @ Hdot) - beta * real_trace(Hdot @ rho_eq)
    value = float(np.sum(frame.r * (ln_r - np.real(np.diag(l)))))
    work_gap = real_trace((frame.rho - rho_eq) @ Hdot)
    return RelativeEntropyRate(value=value, rate=rate, work_gap=work_gap)


def relative_entropy_identity(
    frame: SpectralFrame,
    H: HermitianMatrix,
    Hdot: HermitianMatrix,
    beta: float,
    sirdot: Optional[float] = None,
    wdot_cd: Optional[float] = None,
) -> IdentityCheck:
    """
    Residual of Sirdot = -dS(rho||rho_eq)/dt + beta Wdot_cd + beta Tr[(rho - rho_eq) H_dot].

    The flipped-sign variant (minus on the last term) is returned for diagnostics;
    both agree whenever H is constant.
    """
    if sirdot is None:
        sirdot = entropy_rates(frame, H, beta).Sirdot
    if wdot_cd is None:
        wdot_cd = tbsta_rates(frame, H, Hdot).Wdot_cd
    rel = relative_entropy_rate(frame, H, Hdot, beta)
    base = sirdot + rel.rate - beta * wdot_cd
    return IdentityCheck(
        residual=abs(base - beta * rel.work_gap),
        residual_flipped_sign=abs(base + beta * rel.work_gap),
        relative_entropy=rel,
    )


def semiclassical_rates(
    rho: ComplexMatrix,
    rhodot: ComplexMatrix,
    H: HermitianMatrix,
    Hdot: HermitianMatrix,
    eps_deg: float = EPS_DEG,
) -> SemiclassicalRates:
    """
    qdot = sum_n pdot_n E_n and wdot = sum_n p_n Edot_n in the instantaneous
    eigenbasis of H. pdot_n includes the basis-rotation flow
    <dE_n|rho|E_n> + <E_n|rho|dE_n> from perturbation theory in H_dot;
    degenerate levels are block-diagonalized in H_dot first.
    """
    eig = hermitian_eigendecompose(H)
    energies = np.array(eig.values)
    groups = degeneracy_partition(energies, eps_deg)
    basis = block_diagonalize(eig.vectors, Hdot, groups)
    hdot = basis.conj().T @ Hdot @ basis
    couplings = perturbative_couplings(energies, hdot, group_labels(groups, energies.size))
    np.fill_diagonal(couplings, 0.0)
    r = basis.conj().T @ rho @ basis
    rdot = basis.conj().T @ rhodot @ basis
    populations = np.real(np.diag(r))
    rotation = 2.0 * np.real(np.einsum("nm,mn->n", r, couplings))
    pdot = np.real(np.diag(rdot)) + rotation
    edot = np.real(np.diag(hdot))
    return SemiclassicalRates(
        qdot=float(np.sum(pdot * energies)),
        wdot=float(np.sum(populations * edot)),
        rotation_weighted=float(np.sum(energies * rotation)),
        rotation_unweighted=float(np.sum(rotation)),
    )


def evaluate_point(
    frame: SpectralFrame,
    H: HermitianMatrix,
    Hdot: HermitianMatrix,
    beta: float,
    partition: float = 1.0,
    eps_deg: float = EPS_DEG,
    eps_rank: float = EPS_RANK,
    tol: float = 1e-10,
) -> ThermoRates:
    """All rates and identity residuals at one frame."""
    vh = virtual_hamiltonian(frame, beta, partition, eps_rank)
    cd = cd_generator(frame, vh, eps_rank)
    _, recon = reconstruct_rhodot(frame, vh, cd)
    qconv, wconv, udot = conventional_rates(frame.rho, frame.rhodot, H, Hdot, tol)
    tb = tbsta_rates(frame, H, Hdot, cd.H_cd, tol)
    ent = entropy_rates(frame, H, beta, partition, vh)
    ident = relative_entropy_identity(frame, H, Hdot, beta, ent.Sirdot, tb.Wdot_cd)
    sc = semiclassical_rates(frame.rho, frame.rhodot, H, Hdot, eps_deg)
    residuals = {
        "first_law_conventional": abs(udot - qconv - wconv),
        "first_law_tbsta": abs(udot - tb.Qdot_tbsta - tb.Wdot_tbsta),
        "heat_split": abs(qconv - tb.Qdot_tbsta - tb.Wdot_cd),
        "reconstruction": recon,
        "entropy_routes": ent.route_residual,
        "relative_entropy_identity": ident.residual,
        "relative_entropy_identity_flipped_sign": ident.residual_flipped_sign,
        "wcd_routes": tb.wcd_route_residual,
        "semiclassical_relation": abs(sc.qdot - tb.Qdot_tbsta - tb.Wdot_cd - sc.rotation_weighted),
        "semiclassical_relation_unweighted": abs(
            sc.qdot - tb.Qdot_tbsta - tb.Wdot_cd - sc.rotation_unweighted
        ),
        "flow": frame.flow_residual(),
    }
    return ThermoRates(
        t=frame.t,
        U=expectation(H, frame.rho, tol),
        S=von_neumann_entropy(frame.rho),
        Udot=udot,
        Qdot_conv=qconv,
        Wdot_conv=wconv,
        Qdot_tbsta=tb.Qdot_tbsta,
        Wdot_tbsta=tb.Wdot_tbsta,
        Wdot_cd=tb.Wdot_cd,
        Sdot=ent.Sdot,
        Sirdot=ent.Sirdot,
        qdot_sc=sc.qdot,
        wdot_sc=sc.wdot,
        rel_entropy=ident.relative_entropy.value,
        rel_entropy_rate=ident.relative_entropy.rate,
        work_gap=ident.relative_entropy.work_gap,
        identity_residuals=residuals,
    )


@dataclass
class ThermoLedger:
    """Per-point rates plus cumulative integrals on the trajectory grid."""

    beta: float
    rates: List[ThermoRates]
    frames: List[SpectralFrame]
    hamiltonians: np.ndarray
    hamiltonian_dots: np.ndarray
    quadrature: str = "trapezoid"
    cumulative: Dict[str, np.ndarray] = field(default_factory=dict)
    totals: Dict[str, float] = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.rates])

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rates], dtype=float)

    def residual_series(self, name: str) -> np.ndarray:
        return np.array([r.identity_residuals[name] for r in self.rates], dtype=float)

    def max_residuals(self) -> Dict[str, float]:
        names = self.rates[0].identity_residuals.keys() if self.rates else []
        return {name: float(np.max(self.residual_series(name))) for name in names}

    def finite_difference(self, name: str) -> np.ndarray:
        """Second-order finite-difference derivative of a point series (S, rel_entropy, U)."""
        return np.gradient(self.series(name), self.times, edge_order=2)

    def closure_error(self) -> float:
        """|Delta U - Delta Q_tbsta - Delta W_tbsta| over the window."""
        return abs(self.totals["U"] - self.totals["Q_tbsta"] - self.totals["W_tbsta"])

    def to_frame(self) -> pd.DataFrame:
        res_firstlaw = np.maximum(
            self.residual_series("first_law_conventional"), self.residual_series("first_law_tbsta")
        )
        data = {
            "t": self.times,
            "U": self.series("U"),
            **{name: self.series(name) for name in RATE_FIELDS if name != "Udot"},
            "cum_U": self.cumulative["U"],
            "cum_Q_tbsta": self.cumulative["Q_tbsta"],
            "cum_W_tbsta": self.cumulative["W_tbsta"],
            "cum_Wcd": self.cumulative["W_cd"],
            "cum_S": self.cumulative["S"],
            "cum_Sir": self.cumulative["S_ir"],
            "res_firstlaw": res_firstlaw,
            "res_reconstruction": self.residual_series("reconstruction"),
            "res_relative_entropy": self.residual_series("relative_entropy_identity"),
        }
        return pd.DataFrame(data, columns=CSV_COLUMNS)


CUMULATIVE_SOURCES = {
    "U": "Udot",
    "Q": "Qdot_conv",
    "W": "Wdot_conv",
    "Q_tbsta": "Qdot_tbsta",
    "W_tbsta": "Wdot_tbsta",
    "W_cd": "Wdot_cd",
    "S": "Sdot",
    "S_ir": "Sirdot",
    "q": "qdot_sc",
    "w": "wdot_sc",
}


def integrate_series(
    values: np.ndarray, times: np.ndarray, quadrature: Literal["trapezoid", "simpson"] = "trapezoid"
) -> Tuple[np.ndarray, float]:
    """Cumulative composite trapezoid and the total (Simpson when requested)."""
    cumulative = cumulative_trapezoid(values, times, initial=0.0)
    if quadrature == "simpson":
        return cumulative, float(simpson(values, x=times))
    return cumulative, float(cumulative[-1])


def build_ledger(
    traj: Trajectory,
    flow: SpectralFlow,
    schedule: HamiltonianSchedule,
    beta: float,
    quadrature: Literal["trapezoid", "simpson"] = "trapezoid",
    partition: float = 1.0,
    eps_deg: float = EPS_DEG,
    eps_rank: float = EPS_RANK,
    tolerances: Optional[Tolerances] = None,
) -> ThermoLedger:
    """Evaluate every rate along the trajectory and integrate them."""
    if len(flow) != len(traj) or not np.allclose([f.t for f in flow.frames], traj.times, rtol=0, atol=1e-12):
        raise InputValidationError("Spectral flow and trajectory grids are misaligned")
    if schedule.dim != traj.dim:
        raise InputValidationError("Hamiltonian dimension differs from the trajectory")
    if quadrature == "simpson" and not traj.is_uniform:
        logger.warning("Simpson quadrature requested on a non-uniform grid; using trapezoid totals")
        quadrature = "trapezoid"
    tol = (tolerances or Tolerances()).imaginary

    start = time.time()
    hs = np.stack([schedule.evaluate(t) for t in traj.times])
    hdots = np.stack([schedule.evaluate_dot(t) for t in traj.times])
    rates = [
        evaluate_point(frame, h, hdot, beta, partition, eps_deg, eps_rank, tol)
        for frame, h, hdot in zip(flow.frames, hs, hdots)
    ]
    ledger = ThermoLedger(
        beta=beta, rates=rates, frames=list(flow.frames), hamiltonians=hs, hamiltonian_dots=hdots,
        quadrature=quadrature,
    )
    times = ledger.times
    for name, source in CUMULATIVE_SOURCES.items():
        ledger.cumulative[name], ledger.totals[name] = integrate_series(ledger.series(source), times, quadrature)
    ledger.totals["U_direct"] = float(ledger.series("U")[-1] - ledger.series("U")[0])
    ledger.totals["S_direct"] = float(ledger.series("S")[-1] - ledger.series("S")[0])
    perf_logger.log_stage_time("ledger", time.time() - start, len(rates))
    return ledger


@dataclass
class BoundReport:
    """Pointwise entropy-production bound and its relative-entropy corollary."""

    beta: float
    applicability: str
    bound_holds: np.ndarray
    corollary_holds: np.ndarray
    margin: np.ndarray

    @property
    def bound_fraction(self) -> float:
        return float(np.mean(self.bound_holds))

    @property
    def corollary_fraction(self) -> float:
        return float(np.mean(self.corollary_holds))

    @property
    def holds_everywhere(self) -> bool:
        return bool(np.all(self.bound_holds) and np.all(self.corollary_holds))

    def to_dict(self) -> Dict[str, object]:
        return {
            "beta": self.beta,
            "applicability": self.applicability,
            "bound_fraction": self.bound_fraction,
            "corollary_fraction": self.corollary_fraction,
            "min_margin": float(np.min(self.margin)),
            "holds_everywhere": self.holds_everywhere,
        }


def bound_audit(
    ledger: ThermoLedger, beta: float, applicability: str = "unknown", tol: float = 1e-10
) -> BoundReport:
    """
    Check Sirdot >= beta Wdot_cd and dS(rho||rho_eq)/dt <= beta Tr[(rho - rho_eq) H_dot]
    at every grid point, for any beta >= 0 (beta = 0 tests Sdot >= 0).
    """
    if beta < 0 or not np.isfinite(beta):
        raise InputValidationError("Audit inverse temperature must be finite and non-negative", [f"beta={beta}"])
    sdot = ledger.series("Sdot")
    sir = sdot - beta * ledger.series("Qdot_tbsta")
    lower = beta * ledger.series("Wdot_cd")
    margin = sir - lower
    corollary = []
    for frame, h, hdot in zip(ledger.frames, ledger.hamiltonians, ledger.hamiltonian_dots):
        rel = relative_entropy_rate(frame, h, hdot, beta)
        corollary.append(rel.rate <= beta * rel.work_gap + tol)
    return BoundReport(
        beta=beta,
        applicability=applicability,
        bound_holds=margin >= -tol,
        corollary_holds=np.array(corollary, dtype=bool),
        margin=margin,
    )


def direct_relative_entropy(ledger: ThermoLedger) -> np.ndarray:
    """S(rho||rho_eq) from full matrix logarithms, for finite-difference cross-checks."""
    return np.array(
        [relative_entropy(f.rho, gibbs_state(h, ledger.beta)) for f, h in zip(ledger.frames, ledger.hamiltonians)]
    )
