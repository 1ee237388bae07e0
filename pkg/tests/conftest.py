"""
Shared fixtures: thresholds, seeded random states and frames, and cached scenario runs.
"""

import json
from pathlib import Path

import numpy as np
import pytest

from trajthermo.analysis.spectral_flow import spectral_frame, spectral_flow
from trajthermo.analysis.thermo import build_ledger
from trajthermo.core.config import get_settings
from trajthermo.dynamics.propagator import IntegratorConfig, Trajectory, propagate
from trajthermo.scenarios.catalog import get_scenario


CONFIG_PATH = Path(__file__).parent / "test_config.json"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-window runs (several seconds each)")


def pytest_collection_modifyitems(config, items):
    if json.loads(CONFIG_PATH.read_text())["skip_slow_tests"]:
        skip = pytest.mark.skip(reason="skip_slow_tests is set in test_config.json")
        for item in items:
            if "slow" in item.keywords:
                item.add_marker(skip)


@pytest.fixture(scope="session")
def test_config():
    return json.loads(CONFIG_PATH.read_text())


@pytest.fixture(scope="session")
def thresholds(test_config):
    return test_config["thresholds"]


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    """Fresh settings per test with outputs under tmp_path."""
    monkeypatch.setenv("TRAJTHERMO_OUTPUT_DIR", str(tmp_path / "results"))
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


def random_unitary(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(rng, d, scale=1.0):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (a + a.conj().T)


def random_density(rng, d, floor=0.05, min_gap=0.02):
    """Full-rank state with eigenvalues >= floor/d and gaps >= min_gap."""
    while True:
        weights = rng.dirichlet(np.ones(d)) * (1 - floor) + floor / d
        if d == 1 or np.min(np.diff(np.sort(weights))) >= min_gap:
            break
    u = random_unitary(rng, d)
    rho = (u * weights) @ u.conj().T
    return 0.5 * (rho + rho.conj().T)


def random_rhodot(rng, d, scale=0.3):
    m = random_hermitian(rng, d, scale)
    return m - np.trace(m) / d * np.eye(d)


@pytest.fixture
def random_frame(rng):
    """Factory: a random full-rank frame of dimension d."""

    def make(d):
        return spectral_frame(random_density(rng, d), random_rhodot(rng, d))

    return make


def subsample(traj: Trajectory, every: int) -> Trajectory:
    """Every n-th point; derivatives stay exact for generator-driven trajectories."""
    keep = slice(0, None, every)
    return Trajectory(traj.times[keep], traj.states[keep], traj.rhodots[keep], traj.rhodot_source, dict(traj.metadata))


@pytest.fixture(scope="session")
def scenario_run():
    """Cached propagate -> flow -> ledger runs keyed by their arguments."""
    cache = {}

    def run(name, tf=10.0, step=1e-3, every=1, t_start=None, convention="sz", beta=1.0):
        key = (name, tf, step, every, t_start, convention, beta)
        if key not in cache:
            scenario = get_scenario(name, beta=beta, convention=convention).with_window(tf=tf)
            traj = propagate(scenario.generator(), scenario.initial_state, scenario.t0, tf, IntegratorConfig(step=step))
            start = t_start if t_start is not None else scenario.analysis_start
            if start is not None:
                traj = traj.slice_from(start)
            if every > 1:
                traj = subsample(traj, every)
            flow = spectral_flow(traj)
            ledger = build_ledger(traj, flow, scenario.generator().hamiltonian, beta)
            cache[key] = (scenario, traj, flow, ledger)
        return cache[key]

    return run
