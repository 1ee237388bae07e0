"""
Trajectory Propagation and Ingestion
Fixed-step RK4 integration of Lindblad generators and finite-difference
derivatives for externally supplied density-matrix snapshots.
"""

import json
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterator, List, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from trajthermo.core.exceptions import InputValidationError, IntegrationError, SnapshotFormatError
from trajthermo.core.logging import get_logger, perf_logger
from trajthermo.dynamics.generators import LindbladGenerator, apply_generator
from trajthermo.dynamics.linalg import (
    DensityMatrix,
    HermitianMatrix,
    as_matrix,
    hermitian_eigendecompose,
    hermitize,
    validate_density,
)
from trajthermo.utils.serialization import matrix_from_json, matrix_to_json


logger = get_logger(__name__)

NEGATIVITY_LIMIT = 1e-8
TRACE_DRIFT_LIMIT = 1e-6


class RhodotSource(str, Enum):
    """Where the stored time derivatives come from."""
    GENERATOR_EXACT = "generator-exact"
    FINITE_DIFFERENCE = "finite-difference"


class IntegratorConfig(BaseModel):
    """Fixed-step integrator settings."""

    model_config = ConfigDict(extra="forbid")

    step: float = Field(default=1e-3, gt=0, description="RK4 step (time units)")
    hermitize_each_step: bool = Field(default=True, description="Symmetrize the state after every step")
    renormalize_trace: bool = Field(default=False, description="Rescale to unit trace after every step")


@dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    state: DensityMatrix
    rhodot: HermitianMatrix
    rhodot_source: RhodotSource


@dataclass
class Trajectory:
    """Ordered states on a strictly increasing grid with their time derivatives."""

    times: np.ndarray
    states: np.ndarray
    rhodots: np.ndarray
    rhodot_source: RhodotSource
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or self.times.size < 2:
            raise InputValidationError("A trajectory needs at least 2 points")
        if np.any(np.diff(self.times) <= 0):
            raise InputValidationError("Trajectory times must be strictly increasing")
        if self.states.shape != self.rhodots.shape or self.states.shape[0] != self.times.size:
            raise InputValidationError("States, derivatives and times are misaligned")

    def __len__(self) -> int:
        return self.times.size

    def __iter__(self) -> Iterator[TrajectoryPoint]:
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i: int) -> TrajectoryPoint:
        return TrajectoryPoint(float(self.times[i]), self.states[i], self.rhodots[i], self.rhodot_source)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def is_uniform(self) -> bool:
        steps = np.diff(self.times)
        return bool(np.allclose(steps, steps[0], rtol=1e-9, atol=0.0))

    def trace_drift(self) -> float:
        traces = np.real(np.einsum("nii->n", self.states))
        return float(np.max(np.abs(traces - 1.0)))

    def slice_from(self, t_start: float) -> "Trajectory":
        """Points with t >= t_start (within rounding of the grid)."""
        keep = self.times >= t_start - 1e-12 * max(1.0, abs(t_start))
        return Trajectory(
            self.times[keep], self.states[keep], self.rhodots[keep], self.rhodot_source,
            {**self.metadata, "analysis_start": float(self.times[keep][0])},
        )


def _grid(t0: float, tf: float, step: float) -> np.ndarray:
    n = max(int(round((tf - t0) / step)), 1)
    actual = (tf - t0) / n
    if abs(actual - step) > 1e-9 * step:
        logger.warning("Step adjusted to fit the window", requested=step, actual=actual, steps=n)
    return np.linspace(t0, tf, n + 1)


def _check_envelope(rho: np.ndarray, t: float) -> float:
    drift = abs(complex(np.trace(rho)) - 1.0)
    if drift > TRACE_DRIFT_LIMIT:
        raise IntegrationError("Trace drift exceeded limit", t, drift=drift)
    min_eig = float(hermitian_eigendecompose(hermitize(rho)).values[0])
    if min_eig < -NEGATIVITY_LIMIT:
        raise IntegrationError("State left the positive cone", t, min_eigenvalue=min_eig)
    return drift


def propagate(
    gen: LindbladGenerator,
    rho0,
    t0: float,
    tf: float,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> Trajectory:
    """
    Integrate rho_dot = L(t)[rho] with classical fixed-step RK4.

    Every stored point carries the generator-exact derivative. Trace drift is
    reported in the metadata unless renormalization is enabled.
    """
    if not tf > t0:
        raise InputValidationError("Propagation window must satisfy tf > t0", [f"t0={t0}, tf={tf}"])
    rho = np.array(validate_density(rho0, "initial state"), dtype=complex)
    if rho.shape[0] != gen.dim:
        raise InputValidationError("Initial state dimension differs from generator")

    start = time.time()
    times = _grid(t0, tf, cfg.step)
    h = float(times[1] - times[0])
    states = np.empty((times.size, gen.dim, gen.dim), dtype=complex)
    states[0] = rho
    max_drift = 0.0
    for i in range(times.size - 1):
        t = times[i]
        k1 = gen.rhs(rho, t)
        k2 = gen.rhs(rho + 0.5 * h * k1, t + 0.5 * h)
        k3 = gen.rhs(rho + 0.5 * h * k2, t + 0.5 * h)
        k4 = gen.rhs(rho + h * k3, t + h)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if cfg.hermitize_each_step:
            rho = hermitize(rho)
        if cfg.renormalize_trace:
            rho = rho / np.real(np.trace(rho))
        max_drift = max(max_drift, _check_envelope(rho, times[i + 1]))
        states[i + 1] = rho

    rhodots = np.stack([apply_generator(gen, s, t) for s, t in zip(states, times)])
    perf_logger.log_stage_time("propagate", time.time() - start, times.size)
    if max_drift > 1e-10:
        logger.info("Trace drift observed", max_drift=max_drift)
    return Trajectory(
        times=times,
        states=states,
        rhodots=rhodots,
        rhodot_source=RhodotSource.GENERATOR_EXACT,
        metadata={
            "step": h,
            "steps": times.size - 1,
            "trace_drift": max_drift,
            "hermitize_each_step": cfg.hermitize_each_step,
            "renormalize_trace": cfg.renormalize_trace,
            "uniform_grid": True,
        },
    )


def ingest_snapshots(times: Sequence[float], states: Sequence) -> Trajectory:
    """
    Build a trajectory from snapshots with second-order finite-difference derivatives.

    Interior points use the three-point central stencil on the (possibly
    non-uniform) grid; endpoints use one-sided second-order stencils.
    """
    if len(times) != len(states):
        raise SnapshotFormatError(
            "Snapshot times and states differ in length", [f"{len(times)} times, {len(states)} states"]
        )
    if len(times) < 3:
        raise SnapshotFormatError("At least 3 snapshots are required", [f"got {len(times)}"])
    t = np.asarray(times, dtype=float)
    if not np.all(np.isfinite(t)) or np.any(np.diff(t) <= 0):
        raise SnapshotFormatError("Snapshot times must be finite and strictly increasing")

    validated: List[np.ndarray] = []
    for i, m in enumerate(states):
        try:
            validated.append(np.array(validate_density(m, f"snapshot {i}"), dtype=complex))
        except InputValidationError as exc:
            raise SnapshotFormatError(f"Snapshot {i} is invalid", exc.issues, index=i) from exc
    dims = {m.shape[0] for m in validated}
    if len(dims) != 1:
        raise SnapshotFormatError("Snapshots have different dimensions", [f"dimensions {sorted(dims)}"])

    stack = np.stack(validated)
    rhodots = np.gradient(stack, t, axis=0, edge_order=2)
    rhodots = 0.5 * (rhodots + np.conj(np.swapaxes(rhodots, 1, 2)))
    traj = Trajectory(
        times=t,
        states=stack,
        rhodots=rhodots,
        rhodot_source=RhodotSource.FINITE_DIFFERENCE,
    )
    traj.metadata.update(
        {"snapshots": len(t), "uniform_grid": traj.is_uniform, "trace_drift": traj.trace_drift()}
    )
    if not traj.is_uniform:
        logger.info("Non-uniform snapshot grid", points=len(t))
    return traj


def load_snapshots(path: Union[str, Path]) -> Trajectory:
    """Read {"times": [...], "states": [[[re, im], ...], ...]} and ingest it."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise SnapshotFormatError("Snapshot file not found", [str(path)]) from exc
    except json.JSONDecodeError as exc:
        raise SnapshotFormatError("Snapshot file is not valid JSON", [f"line {exc.lineno}: {exc.msg}"]) from exc
    if not isinstance(payload, dict) or set(payload) != {"times", "states"}:
        keys = sorted(payload) if isinstance(payload, dict) else type(payload).__name__
        raise SnapshotFormatError("Snapshot file must hold exactly 'times' and 'states'", [f"found {keys}"])
    times, states = payload["times"], payload["states"]
    if not isinstance(times, list) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in times
    ):
        raise SnapshotFormatError("'times' must be a list of numbers")
    if not isinstance(states, list):
        raise SnapshotFormatError("'states' must be a list of matrices")
    matrices = [matrix_from_json(m, f"states[{i}]") for i, m in enumerate(states)]
    traj = ingest_snapshots(times, matrices)
    traj.metadata["source_file"] = str(path)
    return traj


def save_snapshots(traj: Trajectory, path: Union[str, Path]) -> Path:
    """Write the states of a trajectory in the snapshot format."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "times": [float(t) for t in traj.times],
        "states": [matrix_to_json(as_matrix(s)) for s in traj.states],
    }
    out.write_text(json.dumps(payload), encoding="utf-8")
    return out
