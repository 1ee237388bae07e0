"""
Tests for eigenvalue rates, eigenvector couplings and frame matching.
"""

import numpy as np
import pytest
from scipy.linalg import expm

from conftest import random_density, random_hermitian, random_rhodot, random_unitary
from trajthermo.core.exceptions import DimensionMismatchError, RankChangeError
from trajthermo.analysis.spectral_flow import (
    degeneracy_partition,
    match_frames,
    spectral_flow,
    spectral_frame,
)
from trajthermo.dynamics.linalg import EigenDecomposition, hermitian_eigendecompose
from trajthermo.dynamics.propagator import IntegratorConfig, ingest_snapshots, propagate
from trajthermo.scenarios.catalog import get_scenario


def smooth_state(t, G):
    """rho = U D U^dagger with U = exp(-iGt) and non-crossing populations; returns (rho, rho_dot)."""
    d = np.array([0.55 + 0.05 * np.sin(t), 0.3 + 0.03 * np.cos(2 * t), 0.15 - 0.05 * np.sin(t) - 0.03 * np.cos(2 * t)])
    ddot = np.array([0.05 * np.cos(t), -0.06 * np.sin(2 * t), -0.05 * np.cos(t) + 0.06 * np.sin(2 * t)])
    u = expm(-1j * G * t)
    rho = (u * d) @ u.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    rhodot = -1j * (G @ rho - rho @ G) + (u * ddot) @ u.conj().T
    return rho, 0.5 * (rhodot + rhodot.conj().T), u, ddot


class TestDegeneracyPartition:
    def test_groups_close_values(self):
        assert degeneracy_partition(np.array([0.1, 0.1 + 1e-10, 0.5])) == [[0, 1], [2]]

    def test_chains(self):
        assert degeneracy_partition(np.array([0.3, 0.3 + 6e-10, 0.3 + 1.2e-9]), eps_deg=1e-9) == [[0, 1, 2]]

    def test_unsorted_input(self):
        assert degeneracy_partition(np.array([0.7, 0.1, 0.2])) == [[1], [2], [0]]


class TestSpectralFrame:
    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_rebuilds_rhodot(self, random_frame, d):
        for _ in range(25):
            frame = random_frame(d)
            assert frame.flow_residual() < 1e-12

    def test_couplings_anti_hermitian(self, random_frame):
        frame = random_frame(4)
        np.testing.assert_allclose(frame.K, -frame.K.conj().T, atol=1e-12)
        np.testing.assert_array_equal(np.diag(frame.K), 0.0)

    def test_rates_sum_to_zero(self, random_frame):
        frame = random_frame(3)
        assert abs(np.sum(frame.rdot)) < 1e-14

    def test_degenerate_block(self, rng):
        u = random_unitary(rng, 3)
        rho = (u * np.array([0.4, 0.4, 0.2])) @ u.conj().T
        rho = 0.5 * (rho + rho.conj().T)
        frame = spectral_frame(rho, random_rhodot(rng, 3))
        assert (1, 2) in frame.groups
        projected = frame.in_basis(frame.rhodot)
        assert abs(projected[1, 2]) < 1e-12
        assert frame.K[1, 2] == 0.0 and frame.K[2, 1] == 0.0
        assert frame.flow_residual() < 1e-12

    def test_rephasing_is_a_gauge(self, rng, random_frame):
        frame = random_frame(3)
        phased = frame.rephased(np.exp(1j * rng.uniform(0, 2 * np.pi, 3)))
        assert phased.flow_residual() < 1e-12
        np.testing.assert_array_equal(phased.rdot, frame.rdot)

    def test_rank_and_min_eigenvalue(self):
        frame = spectral_frame(np.diag([1.0, 0.0]).astype(complex), np.zeros((2, 2), dtype=complex))
        assert frame.rank == 1
        assert frame.min_eigenvalue == 0.0

    def test_to_dict(self, random_frame):
        data = random_frame(2).to_dict()
        assert set(data) == {"t", "eigenvalues", "eigenvalue_rates", "rank", "degeneracy_groups"}


class TestSmoothTrajectories:
    def test_exact_rates_and_projector_derivatives(self, rng, test_config):
        for _ in range(test_config["property_batches"]["smooth_trajectories"]):
            G = random_hermitian(rng, 3, 0.5)
            t = rng.uniform(0.0, 5.0)
            rho, rhodot, u, ddot = smooth_state(t, G)
            frame = spectral_frame(rho, rhodot, t=t)
            # Ascending order maps to populations (2, 1, 0)
            np.testing.assert_allclose(frame.rdot, ddot[::-1], atol=1e-12)
            dv = frame.eigenvector_derivatives()
            for k, m in enumerate((2, 1, 0)):
                p = np.outer(u[:, m], u[:, m].conj())
                pdot = -1j * (G @ p - p @ G)
                v = frame.V[:, k]
                pdot_frame = np.outer(dv[:, k], v.conj()) + np.outer(v, dv[:, k].conj())
                np.testing.assert_allclose(pdot_frame, pdot, atol=1e-10)

    def test_finite_difference_rates_converge_at_second_order(self, rng, thresholds):
        G = random_hermitian(rng, 3, 0.5)
        t_probe = 0.4
        errors = []
        for h in (2e-3, 1e-3):
            times = np.arange(0, int(round(0.8 / h)) + 1) * h
            states = [smooth_state(t, G)[0] for t in times]
            flow = spectral_flow(ingest_snapshots(times, states))
            i = int(round(t_probe / h))
            errors.append(np.max(np.abs(flow[i].rdot - smooth_state(t_probe, G)[3][::-1])))
        low, high = thresholds["halving_ratio"]
        assert low <= errors[0] / errors[1] <= high


class TestMatching:
    def test_recovers_permutation_and_phase(self, rng):
        rho = random_density(rng, 3)
        frame = spectral_frame(rho, random_rhodot(rng, 3))
        perm = np.array([2, 0, 1])
        phases = np.exp(1j * np.array([0.3, -1.2, 2.0]))
        raw = EigenDecomposition(values=frame.r[perm], vectors=frame.V[:, perm] * phases)
        match = match_frames(frame, raw)
        aligned = match.apply(raw)
        np.testing.assert_allclose(aligned.values, frame.r)
        np.testing.assert_allclose(aligned.vectors, frame.V, atol=1e-14)
        np.testing.assert_allclose(match.overlaps, 1.0)

    def test_flow_along_coherent_start(self):
        s = get_scenario("case-iii", beta=1.0)
        traj = propagate(s.generator(), s.initial_state, 0.0, 2.0, IntegratorConfig(step=1e-2))
        flow = spectral_flow(traj)
        assert len(flow) == len(traj)
        assert not flow.crossings
        assert flow.min_overlap > 0.99
        assert all(entry["identity"] for entry in flow.matching_log)
        assert all(len(entry["phases"]) == 2 for entry in flow.matching_log)
        assert all(abs(p) <= np.pi for entry in flow.matching_log for p in entry["phases"])
        assert np.all(np.diff(flow.eigenvalues(), axis=1) > 0)
        assert max(f.flow_residual() for f in flow.frames) < 1e-12

    def test_rank_change_detected(self):
        s = get_scenario("case-ii", beta=1.0)
        traj = propagate(s.generator(), s.initial_state, 0.0, 0.5, IntegratorConfig(step=1e-2))
        with pytest.raises(RankChangeError) as info:
            spectral_flow(traj)
        assert info.value.details["ranks"] == [1, 2]
        assert info.value.exit_code == 3

    def test_frames_use_matched_decomposition(self, rng):
        rho = random_density(rng, 2)
        eig = hermitian_eigendecompose(rho)
        frame = spectral_frame(rho, random_rhodot(rng, 2), decomposition=eig)
        np.testing.assert_array_equal(frame.r, eig.values)

    def test_dimension_mismatch(self, rng):
        frame = spectral_frame(random_density(rng, 3), random_rhodot(rng, 3))
        with pytest.raises(DimensionMismatchError) as info:
            match_frames(frame, hermitian_eigendecompose(random_density(rng, 2)))
        assert info.value.exit_code == 2

    def test_log_records_applied_phases(self):
        s = get_scenario("case-iii", beta=1.0)
        traj = propagate(s.generator(), s.initial_state, 0.0, 1.0, IntegratorConfig(step=0.1))
        flow = spectral_flow(traj)
        for i, entry in enumerate(flow.matching_log, start=1):
            match = match_frames(flow[i - 1], hermitian_eigendecompose(traj.states[i]))
            np.testing.assert_allclose(entry["phases"], np.angle(match.phases))
