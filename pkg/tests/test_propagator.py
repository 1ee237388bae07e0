"""
Tests for RK4 propagation and snapshot ingestion.
"""

import json

import numpy as np
import pytest

from trajthermo.core.exceptions import InputValidationError, IntegrationError, SnapshotFormatError
from trajthermo.dynamics.generators import apply_generator, damped_qubit_generator
from trajthermo.dynamics.linalg import IDENTITY_2, SIGMA_X, SIGMA_Z
from trajthermo.dynamics.propagator import (
    IntegratorConfig,
    RhodotSource,
    ingest_snapshots,
    load_snapshots,
    propagate,
    save_snapshots,
)
from trajthermo.scenarios.catalog import get_scenario
from trajthermo.scenarios.oracles import analytic_reference
from trajthermo.utils.serialization import matrix_to_json


@pytest.fixture(scope="module")
def case_i_traj():
    s = get_scenario("case-i", beta=1.0)
    return s, propagate(s.generator(), s.initial_state, s.t0, s.tf, IntegratorConfig(step=1e-3))


class TestPropagate:
    def test_grid(self, case_i_traj):
        _, traj = case_i_traj
        assert len(traj) == 10001
        assert traj.times[0] == 0.0 and traj.times[-1] == 10.0
        assert traj.is_uniform
        assert traj.rhodot_source is RhodotSource.GENERATOR_EXACT
        assert traj.metadata["step"] == pytest.approx(1e-3)

    def test_case_i_matches_closed_form(self, case_i_traj, thresholds):
        s, traj = case_i_traj
        for i in (0, 1, 2500, 5000, 10000):
            exact = analytic_reference(s, traj.times[i]).state
            assert np.max(np.abs(traj.states[i] - exact)) < thresholds["oracle_state"]

    def test_case_ii_matches_closed_form(self, thresholds):
        s = get_scenario("case-ii", beta=1.0)
        traj = propagate(s.generator(), s.initial_state, 0.0, 10.0, IntegratorConfig(step=1e-3))
        for i in (1, 10, 1000, 4321, 10000):
            exact = analytic_reference(s, traj.times[i]).state
            assert np.max(np.abs(traj.states[i] - exact)) < thresholds["oracle_state"]

    def test_derivatives_are_generator_exact(self, case_i_traj):
        s, traj = case_i_traj
        gen = s.generator()
        for i in (0, 777, 10000):
            np.testing.assert_array_equal(traj.rhodots[i], apply_generator(gen, traj.states[i], traj.times[i]))

    def test_trace_preserved(self, case_i_traj):
        _, traj = case_i_traj
        assert traj.trace_drift() < 1e-12

    def test_step_adjusted_to_window(self):
        traj = propagate(damped_qubit_generator(0.1, 1.0), 0.5 * IDENTITY_2, 0.0, 1.0, IntegratorConfig(step=0.3))
        assert len(traj) == 4
        assert traj.metadata["step"] == pytest.approx(1.0 / 3.0)

    def test_renormalized_trace(self):
        cfg = IntegratorConfig(step=0.01, renormalize_trace=True)
        traj = propagate(damped_qubit_generator(0.1, 1.0), 0.5 * (IDENTITY_2 + SIGMA_X), 0.0, 1.0, cfg)
        assert traj.metadata["renormalize_trace"] is True
        assert traj.trace_drift() < 1e-14

    def test_empty_window_rejected(self):
        with pytest.raises(InputValidationError):
            propagate(damped_qubit_generator(0.1, 1.0), 0.5 * IDENTITY_2, 1.0, 1.0)

    def test_invalid_initial_state(self):
        with pytest.raises(InputValidationError, match="positive semidefinite"):
            propagate(damped_qubit_generator(0.1, 1.0), np.diag([1.2, -0.2]), 0.0, 1.0)

    def test_unstable_step_leaves_positive_cone(self):
        with pytest.raises(IntegrationError) as info:
            propagate(
                damped_qubit_generator(100.0, 1.0),
                0.5 * (IDENTITY_2 + 0.5 * SIGMA_Z),
                0.0,
                1.0,
                IntegratorConfig(step=0.1),
            )
        assert info.value.t == pytest.approx(0.1)
        assert info.value.exit_code == 3

    def test_fourth_order_convergence(self):
        s = get_scenario("case-i", beta=1.0)
        errors = []
        for step in (0.5, 0.25):
            traj = propagate(s.generator(), s.initial_state, 0.0, 10.0, IntegratorConfig(step=step))
            exact = np.array([analytic_reference(s, t).state for t in traj.times])
            errors.append(np.max(np.abs(traj.states - exact)))
        assert errors[0] > 1e-10
        assert errors[0] / errors[1] >= 12.0

    def test_hermiticity_and_trace_on_coherent_start(self):
        s = get_scenario("case-iii", beta=1.0)
        cfg = IntegratorConfig(step=1e-3, hermitize_each_step=False)
        traj = propagate(s.generator(), s.initial_state, 0.0, 10.0, cfg)
        assert len(traj) == 10001
        assert np.max(np.abs(traj.states - np.conj(np.swapaxes(traj.states, 1, 2)))) < 1e-8
        assert traj.trace_drift() < 1e-8

    def test_slice_from(self, case_i_traj):
        _, traj = case_i_traj
        tail = traj.slice_from(2.5)
        assert tail.times[0] == pytest.approx(2.5)
        assert len(tail) == 7501
        assert tail.metadata["analysis_start"] == pytest.approx(2.5)


def _snapshot_payload(times, states):
    return {"times": list(times), "states": [matrix_to_json(s) for s in states]}


class TestSnapshots:
    def test_round_trip(self, tmp_path):
        s = get_scenario("case-iii", beta=1.0)
        traj = propagate(s.generator(), s.initial_state, 0.0, 0.5, IntegratorConfig(step=0.01))
        path = save_snapshots(traj, tmp_path / "nested" / "snap.json")
        loaded = load_snapshots(path)
        np.testing.assert_array_equal(loaded.times, traj.times)
        np.testing.assert_array_equal(loaded.states, traj.states)
        assert loaded.rhodot_source is RhodotSource.FINITE_DIFFERENCE
        assert loaded.metadata["source_file"] == str(path)

    def test_finite_differences_track_generator(self, tmp_path):
        s = get_scenario("case-iii", beta=1.0)
        traj = propagate(s.generator(), s.initial_state, 0.0, 1.0, IntegratorConfig(step=1e-3))
        loaded = load_snapshots(save_snapshots(traj, tmp_path / "snap.json"))
        assert np.max(np.abs(loaded.rhodots - traj.rhodots)) < 1e-5

    def test_second_order_on_non_uniform_grid(self):
        times = np.array([0.0, 0.1, 0.25, 0.3, 0.5, 0.9])
        states = [0.5 * IDENTITY_2 + (0.2 * t - 0.1 * t * t) * SIGMA_Z for t in times]
        traj = ingest_snapshots(times, states)
        assert not traj.metadata["uniform_grid"]
        for t, rhodot in zip(times, traj.rhodots):
            np.testing.assert_allclose(rhodot, (0.2 - 0.2 * t) * SIGMA_Z, atol=1e-12)

    def test_two_snapshots_rejected(self):
        with pytest.raises(SnapshotFormatError, match="At least 3"):
            ingest_snapshots([0.0, 1.0], [0.5 * IDENTITY_2] * 2)

    def test_non_increasing_times(self):
        with pytest.raises(SnapshotFormatError):
            ingest_snapshots([0.0, 1.0, 1.0], [0.5 * IDENTITY_2] * 3)

    def test_invalid_snapshot_names_index(self):
        states = [0.5 * IDENTITY_2, np.diag([1.1, -0.1]), 0.5 * IDENTITY_2]
        with pytest.raises(SnapshotFormatError) as info:
            ingest_snapshots([0.0, 1.0, 2.0], states)
        assert info.value.details["index"] == 1
        assert any("positive semidefinite" in issue for issue in info.value.issues)

    def test_mixed_dimensions(self):
        with pytest.raises(SnapshotFormatError, match="dimensions"):
            ingest_snapshots([0.0, 1.0, 2.0], [0.5 * IDENTITY_2, 0.5 * IDENTITY_2, np.eye(3) / 3])

    def test_unknown_keys(self, tmp_path):
        path = tmp_path / "snap.json"
        payload = _snapshot_payload([0.0, 1.0, 2.0], [0.5 * IDENTITY_2] * 3)
        payload["extra"] = 1
        path.write_text(json.dumps(payload))
        with pytest.raises(SnapshotFormatError, match="exactly"):
            load_snapshots(path)

    def test_malformed_complex_entry(self, tmp_path):
        path = tmp_path / "snap.json"
        payload = _snapshot_payload([0.0, 1.0, 2.0], [0.5 * IDENTITY_2] * 3)
        payload["states"][2][0][1] = [0.0, 0.0, 0.0]
        path.write_text(json.dumps(payload))
        with pytest.raises(SnapshotFormatError, match="complex"):
            load_snapshots(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SnapshotFormatError, match="not found"):
            load_snapshots(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "snap.json"
        path.write_text("{not json")
        with pytest.raises(SnapshotFormatError):
            load_snapshots(path)
