"""
Tests for dense Hermitian linear algebra.
"""

import numpy as np
import pytest

from conftest import random_density, random_hermitian
from trajthermo.core.exceptions import (
    DimensionMismatchError,
    InputValidationError,
    NumericalConsistencyError,
    SupportError,
)
from trajthermo.dynamics.linalg import (
    IDENTITY_2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    check_same_dim,
    density_issues,
    gibbs_state,
    hermitian_eigendecompose,
    log_partition,
    matrix_rank,
    real_trace,
    relative_entropy,
    validate_density,
    validate_hermitian,
    von_neumann_entropy,
)


class TestEigendecomposition:
    @pytest.mark.parametrize("pauli", [SIGMA_X, SIGMA_Y, SIGMA_Z])
    def test_pauli_spectrum(self, pauli):
        eig = hermitian_eigendecompose(pauli)
        np.testing.assert_allclose(eig.values, [-1.0, 1.0], atol=1e-14)
        assert eig.reconstruction_residual(pauli) < 1e-14

    @pytest.mark.parametrize("d", [2, 3, 4, 6])
    def test_random_hermitian_matches_reference(self, rng, d):
        for _ in range(20):
            m = random_hermitian(rng, d)
            eig = hermitian_eigendecompose(m)
            np.testing.assert_allclose(eig.values, np.linalg.eigvalsh(m), atol=1e-12)
            assert eig.reconstruction_residual(m) < 1e-12
            assert eig.orthonormality_residual() < 1e-12

    def test_values_ascending_and_phases_fixed(self, rng):
        eig = hermitian_eigendecompose(random_hermitian(rng, 4))
        assert np.all(np.diff(eig.values) >= 0)
        pivots = eig.vectors[np.argmax(np.abs(eig.vectors), axis=0), np.arange(4)]
        np.testing.assert_allclose(pivots.imag, 0.0, atol=1e-15)
        assert np.all(pivots.real > 0)

    def test_deterministic(self, rng):
        m = random_hermitian(rng, 3)
        a, b = hermitian_eigendecompose(m), hermitian_eigendecompose(m.copy())
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.vectors, b.vectors)

    def test_degenerate_identity(self):
        eig = hermitian_eigendecompose(np.eye(3))
        np.testing.assert_allclose(eig.values, 1.0)
        np.testing.assert_allclose(np.abs(eig.vectors).sum(axis=0), 1.0, atol=1e-15)
        assert eig.orthonormality_residual() == 0.0

    def test_non_hermitian_rejected(self):
        with pytest.raises(InputValidationError):
            hermitian_eigendecompose(np.array([[0, 1], [0, 0]]))

    def test_results_read_only(self):
        eig = hermitian_eigendecompose(SIGMA_X)
        with pytest.raises(ValueError):
            eig.values[0] = 3.0


class TestValidation:
    def test_valid_state(self):
        rho = validate_density(0.5 * IDENTITY_2)
        assert not rho.flags.writeable

    def test_lists_every_issue(self):
        bad = np.array([[1.2, 0.3j], [0.1, 0.4]])
        issues = density_issues(bad)
        assert any("Hermitian" in i for i in issues)
        assert any("trace" in i for i in issues)

    def test_negative_eigenvalue(self):
        with pytest.raises(InputValidationError, match="positive semidefinite"):
            validate_density(np.diag([1.1, -0.1]), "probe")

    def test_non_square(self):
        with pytest.raises(InputValidationError):
            validate_hermitian(np.ones((2, 3)))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            check_same_dim(np.eye(2), np.eye(3))

    def test_real_trace_rejects_imaginary_residue(self):
        with pytest.raises(NumericalConsistencyError):
            real_trace(np.diag([1.0, 1e-6j]))
        assert real_trace(np.diag([1.0, 1e-13j])) == pytest.approx(1.0)


class TestEntropies:
    def test_maximally_mixed(self):
        assert von_neumann_entropy(np.eye(4) / 4) == pytest.approx(np.log(4), abs=1e-14)

    def test_pure_state(self):
        assert von_neumann_entropy(0.5 * (IDENTITY_2 + SIGMA_X)) == pytest.approx(0.0, abs=1e-14)

    def test_rank(self):
        assert matrix_rank(0.5 * (IDENTITY_2 + SIGMA_X)) == 1
        assert matrix_rank(np.eye(3) / 3) == 3

    def test_relative_entropy_of_state_with_itself(self, rng):
        rho = random_density(rng, 3)
        assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-12)

    def test_relative_entropy_matches_classical_formula(self):
        p, q = np.array([0.3, 0.7]), np.array([0.6, 0.4])
        expected = float(np.sum(p * np.log(p / q)))
        assert relative_entropy(np.diag(p), np.diag(q)) == pytest.approx(expected, abs=1e-14)

    def test_support_error(self):
        with pytest.raises(SupportError):
            relative_entropy(np.eye(2) / 2, np.diag([1.0, 0.0]))


class TestGibbs:
    def test_qubit_populations(self):
        rho = gibbs_state(SIGMA_Z, 1.0)
        np.testing.assert_allclose(np.diag(rho).real, np.array([np.exp(-1), np.exp(1)]) / (2 * np.cosh(1)), atol=1e-15)

    def test_large_beta_is_stable(self):
        rho = gibbs_state(SIGMA_Z, 1e4)
        np.testing.assert_allclose(np.diag(rho).real, [0.0, 1.0], atol=1e-15)

    def test_log_partition(self):
        log_z, _ = log_partition(np.diag([0.0, 1.0, 2.0]), 2.0)
        assert log_z == pytest.approx(np.log(1 + np.exp(-2) + np.exp(-4)))

    @pytest.mark.parametrize("beta", [0.0, -1.0, np.inf])
    def test_invalid_beta(self, beta):
        with pytest.raises(InputValidationError):
            gibbs_state(SIGMA_Z, beta)


class TestLargeAndRandomInputs:
    def test_reconstruction_at_dimension_sixteen(self, rng):
        for _ in range(5):
            m = random_hermitian(rng, 16)
            eig = hermitian_eigendecompose(m)
            assert eig.reconstruction_residual(m) < 1e-11
            assert eig.orthonormality_residual() < 1e-11

    def test_relative_entropy_non_negative(self, rng):
        for i in range(1000):
            d = 2 + i % 3
            rho, sigma = random_density(rng, d), random_density(rng, d)
            assert relative_entropy(rho, sigma) >= -1e-12

    def test_entropy_bounds(self, rng):
        for d in (2, 3, 4):
            s = von_neumann_entropy(random_density(rng, d))
            assert 0.0 <= s <= np.log(d) + 1e-12


class TestEntropyExamples:
    def test_two_level_entropy(self):
        assert von_neumann_entropy(np.diag([0.75, 0.25])) == pytest.approx(0.5623351446188083, abs=1e-14)

    def test_two_level_relative_entropy(self):
        expected = 0.75 * np.log(1.5) + 0.25 * np.log(0.5)
        assert relative_entropy(np.diag([0.75, 0.25]), np.eye(2) / 2) == pytest.approx(expected, abs=1e-14)
        assert expected == pytest.approx(0.13082, abs=1e-5)


class TestGibbsProperties:
    def test_entropy_decreases_with_beta(self, rng):
        h = random_hermitian(rng, 4)
        entropies = [von_neumann_entropy(gibbs_state(h, beta)) for beta in np.geomspace(1e-3, 20.0, 60)]
        assert np.all(np.diff(entropies) <= 1e-12)

    def test_high_temperature_limit(self, rng):
        for d in (2, 4):
            np.testing.assert_allclose(gibbs_state(random_hermitian(rng, d), 1e-9), np.eye(d) / d, atol=1e-8)

    def test_commutes_with_hamiltonian(self, rng):
        for d in (2, 3, 4):
            h = random_hermitian(rng, d)
            rho = gibbs_state(h, 0.7)
            assert np.max(np.abs(h @ rho - rho @ h)) < 1e-11
