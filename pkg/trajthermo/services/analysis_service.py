"""
Analysis Service
Runs the propagate -> spectral flow -> ledger -> audit pipeline for scenarios,
inline generators and snapshot files, alone or in a batch.
"""

import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from trajthermo import __version__
from trajthermo.analysis.spectral_flow import SpectralFlow, spectral_flow
from trajthermo.analysis.tbsta import regularize
from trajthermo.analysis.thermo import BoundReport, ThermoLedger, bound_audit, build_ledger
from trajthermo.core.config import Settings, Tolerances, get_settings
from trajthermo.core.exceptions import InputValidationError, TrajThermoError
from trajthermo.core.logging import get_logger, perf_logger
from trajthermo.dynamics.generators import HamiltonianSchedule, LindbladGenerator
from trajthermo.dynamics.propagator import Trajectory, load_snapshots, propagate, save_snapshots
from trajthermo.models.requests import AnalyzeConfig, RunConfig
from trajthermo.models.responses import AuditReport, AuditRow, Provenance
from trajthermo.scenarios.catalog import Scenario, get_scenario
from trajthermo.scenarios.oracles import energy_budget_oracle, published_energy_budget
from trajthermo.utils.serialization import matrix_from_json


logger = get_logger(__name__)

FIRST_LAW_CHECKS = ("first_law_conventional", "first_law_tbsta")


@dataclass
class AnalysisResult:
    """Everything one analyzed trajectory produced."""

    name: str
    trajectory: Trajectory
    flow: SpectralFlow
    ledger: ThermoLedger
    audit: AuditReport
    bounds: List[BoundReport]
    provenance: Provenance
    scenario: Optional[Scenario] = None
    reference_budget: Optional[Dict[str, Dict[str, float]]] = None
    warnings: List[str] = field(default_factory=list)


class AnalysisService:
    """Pipeline over one trajectory at a time."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    def tolerances(self, overrides: Dict[str, float]) -> Tolerances:
        try:
            return self.settings.tolerances.override(overrides)
        except ValueError as exc:
            raise InputValidationError("Invalid tolerance override", [str(exc)]) from exc

    def resolve_run(
        self, cfg: RunConfig
    ) -> Tuple[LindbladGenerator, np.ndarray, float, float, Optional[Scenario]]:
        """Generator, initial state and window of a run config."""
        if cfg.beta is None:
            raise InputValidationError("Inverse temperature is required", ["beta: pass --beta or set it in the config"])
        if cfg.scenario is not None:
            params = {"beta": cfg.beta, "convention": cfg.convention}
            for key in ("gamma", "omega0", "ramp_rate"):
                if getattr(cfg, key) is not None:
                    params[key] = getattr(cfg, key)
            scenario = get_scenario(cfg.scenario, **params).with_window(cfg.t0, cfg.tf)
            return scenario.generator(), scenario.initial_state, scenario.t0, scenario.tf, scenario
        gen = cfg.generator.to_generator()
        return gen, matrix_from_json(cfg.initial_state, "initial_state"), cfg.t0, cfg.tf, None

    def run(self, cfg: RunConfig) -> AnalysisResult:
        """Propagate and analyze one run config."""
        start = time.time()
        gen, rho0, t0, tf, scenario = self.resolve_run(cfg)
        log = logger.bind(run=cfg.name, t0=t0, tf=tf)
        integrator = cfg.integrator
        if "step" not in integrator.model_fields_set:
            integrator = integrator.model_copy(update={"step": self.settings.default_step})
        log.info("Propagating trajectory", step=integrator.step)
        traj = propagate(gen, rho0, t0, tf, integrator)
        if cfg.out_snapshots:
            save_snapshots(traj, cfg.out_snapshots)

        analysis_start = cfg.analysis_start
        if analysis_start is None and scenario is not None and cfg.regularize_delta is None:
            analysis_start = scenario.analysis_start
        result = self.analyze_trajectory(
            name=cfg.name,
            traj=traj,
            schedule=gen.hamiltonian,
            beta=cfg.beta,
            tolerances=self.tolerances(cfg.tolerances),
            regularize_delta=cfg.regularize_delta,
            analysis_start=analysis_start,
            quadrature=cfg.quadrature,
            partition=cfg.partition,
            scenario=scenario,
            parameters=cfg.model_dump(exclude={"generator", "initial_state"}),
            convention=cfg.convention if scenario is not None else None,
        )
        if scenario is not None and scenario.name == "case-iii" and t0 == 0.0:
            result.reference_budget = {
                "closed_form": energy_budget_oracle(
                    scenario.gamma, scenario.omega0, scenario.beta, tf, scenario.convention
                ),
                "published": published_energy_budget(),
            }
            if scenario.convention != "sz-half":
                note = "Published energy budget assumes H = (omega0/2) sigma_z; rerun with --convention sz-half to compare"
                log.warning(note)
                result.warnings.append(note)
        perf_logger.log_stage_time("run", time.time() - start, len(traj))
        return result

    def analyze(self, cfg: AnalyzeConfig) -> AnalysisResult:
        """Analyze a snapshot file with finite-difference derivatives."""
        if cfg.beta is None:
            raise InputValidationError("Inverse temperature is required", ["beta: pass --beta or set it in the config"])
        traj = load_snapshots(cfg.snapshots)
        if cfg.scenario is not None:
            params = {"beta": cfg.beta, "convention": cfg.convention}
            for key in ("omega0", "ramp_rate"):
                if getattr(cfg, key) is not None:
                    params[key] = getattr(cfg, key)
            schedule = get_scenario(cfg.scenario, **params).generator().hamiltonian
        else:
            schedule = cfg.hamiltonian.to_generator_spec().to_generator().hamiltonian
        if schedule.dim != traj.dim:
            raise InputValidationError(
                "Hamiltonian dimension differs from the snapshots", [f"H {schedule.dim}, states {traj.dim}"]
            )
        return self.analyze_trajectory(
            name=cfg.name,
            traj=traj,
            schedule=schedule,
            beta=cfg.beta,
            tolerances=self.tolerances(cfg.tolerances),
            regularize_delta=cfg.regularize_delta,
            analysis_start=cfg.analysis_start,
            quadrature=cfg.quadrature,
            partition=cfg.partition,
            parameters=cfg.model_dump(exclude={"hamiltonian"}),
        )

    def analyze_trajectory(
        self,
        name: str,
        traj: Trajectory,
        schedule: HamiltonianSchedule,
        beta: float,
        tolerances: Optional[Tolerances] = None,
        regularize_delta: Optional[float] = None,
        analysis_start: Optional[float] = None,
        quadrature: str = "trapezoid",
        partition: float = 1.0,
        scenario: Optional[Scenario] = None,
        parameters: Optional[Dict[str, Any]] = None,
        convention: Optional[str] = None,
    ) -> AnalysisResult:
        tolerances = tolerances or self.settings.tolerances
        warnings: List[str] = []
        if analysis_start is not None and analysis_start > traj.times[0]:
            traj = traj.slice_from(analysis_start)
            logger.info("Analysis window trimmed", analysis_start=float(traj.times[0]), points=len(traj))
        if regularize_delta:
            states, rhodots = regularize(traj.states, traj.rhodots, regularize_delta)
            traj = Trajectory(
                traj.times, states, rhodots, traj.rhodot_source,
                {**traj.metadata, "regularize_delta": regularize_delta},
            )
            logger.info("Trajectory regularized", delta=regularize_delta)

        flow = spectral_flow(traj, self.settings.eps_deg, self.settings.eps_rank)
        if flow.crossings:
            note = f"{len(flow.crossings)} weak frame overlaps (min {flow.min_overlap:.3f}); check for level crossings"
            warnings.append(note)
        ledger = build_ledger(
            traj, flow, schedule, beta,
            quadrature=quadrature,
            partition=partition,
            eps_deg=self.settings.eps_deg,
            eps_rank=self.settings.eps_rank,
            tolerances=tolerances,
        )
        bounds = [bound_audit(ledger, beta, self._applicability(scenario, beta), tolerances.bound)]
        if scenario is not None and scenario.beta_eff is not None and scenario.beta_eff != beta:
            bounds.append(bound_audit(ledger, scenario.beta_eff, scenario.applicability, tolerances.bound))
        audit = self.audit(name, ledger, bounds[-1], tolerances)

        provenance = Provenance(
            software_version=__version__,
            parameters=parameters or {},
            step=traj.metadata.get("step"),
            convention=convention,
            rhodot_source=traj.rhodot_source.value,
            tolerances=tolerances.model_dump(),
            regularize_delta=regularize_delta,
            analysis_start=float(traj.times[0]),
        )
        return AnalysisResult(
            name=name, trajectory=traj, flow=flow, ledger=ledger, audit=audit, bounds=bounds,
            provenance=provenance, scenario=scenario, warnings=warnings,
        )

    @staticmethod
    def _applicability(scenario: Optional[Scenario], beta: float) -> str:
        if scenario is None:
            return "unknown"
        if scenario.beta_eff is not None and scenario.beta_eff != beta:
            return f"reported only (steady state is Gibbsian at beta_eff = {scenario.beta_eff:g})"
        return scenario.applicability

    def audit(self, name: str, ledger: ThermoLedger, bound: BoundReport, tolerances: Tolerances) -> AuditReport:
        """Identity and bound checks over the whole grid."""
        worst = ledger.max_residuals()
        rows = [
            AuditRow(
                name="first_law",
                value=max(worst[k] for k in FIRST_LAW_CHECKS),
                tolerance=tolerances.first_law,
                passed=max(worst[k] for k in FIRST_LAW_CHECKS) <= tolerances.first_law,
            )
        ]
        for check, tol in (
            ("heat_split", tolerances.heat_split),
            ("reconstruction", tolerances.reconstruction),
            ("entropy_routes", tolerances.entropy_routes),
            ("relative_entropy_identity", tolerances.relative_entropy_identity),
        ):
            rows.append(AuditRow(name=check, value=worst[check], tolerance=tol, passed=worst[check] <= tol))

        span = float(ledger.times[-1] - ledger.times[0])
        closure_tol = 1e-8 * span
        closure = ledger.closure_error()
        rows.append(AuditRow(name="ledger_closure", value=closure, tolerance=closure_tol, passed=closure <= closure_tol))
        rows.append(
            AuditRow(
                name="entropy_bound",
                value=1.0 - min(bound.bound_fraction, bound.corollary_fraction),
                tolerance=tolerances.bound,
                passed=bound.holds_everywhere,
                note=f"beta={bound.beta:g}; {bound.applicability}",
            )
        )
        report = AuditReport(run=name, rows=rows)
        if not report.passed:
            logger.warning("Audit failed", run=name, failures=report.failures())
        return report


def _run_isolated(payload: Dict[str, Any]) -> Dict[str, Any]:
    """Process-pool worker: one config in, one summary out."""
    from trajthermo.services.report_service import ReportService

    service = AnalysisService()
    try:
        cfg = RunConfig.model_validate(payload)
        result = service.run(cfg)
        summary = ReportService(service.settings).write(result, cfg.out_csv, cfg.out_json)
        return {"run": cfg.name, "exit_code": 0, "outputs": summary.outputs}
    except TrajThermoError as exc:
        return {"run": payload.get("scenario") or "custom", "exit_code": exc.exit_code, "error": exc.to_dict()}


def run_batch(configs: List[RunConfig], max_workers: Optional[int] = None) -> List[Dict[str, Any]]:
    """Run several configs in parallel; outputs must not collide."""
    targets = [(c.out_csv, c.out_json) for c in configs]
    if any(t is None for pair in targets for t in pair) or len(set(targets)) != len(targets):
        raise InputValidationError("Batch runs need distinct out_csv and out_json for every config")
    workers = min(max_workers or get_settings().max_workers, len(configs))
    outcomes: List[Dict[str, Any]] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_isolated, c.model_dump()) for c in configs]
        for future in as_completed(futures):
            outcome = future.result()
            logger.info("Batch item finished", run=outcome["run"], exit_code=outcome["exit_code"])
            outcomes.append(outcome)
    return outcomes
