"""
Tests for the scenario catalog and the closed-form qubit references.
"""

import numpy as np
import pytest

from trajthermo.core.exceptions import InputValidationError, OracleUnavailableError
from trajthermo.scenarios.catalog import SCENARIO_NAMES, catalog, get_scenario
from trajthermo.scenarios.oracles import (
    analytic_reference,
    coherence,
    energy_budget_oracle,
    pure_start_coherence,
    pure_start_eigenvalues,
    pure_start_eigenvectors,
    published_energy_budget,
    qubit_eigenvalues,
    qubit_eigenvectors,
)


class TestCatalog:
    def test_five_scenarios(self):
        scenarios = catalog()
        assert tuple(s.name for s in scenarios) == SCENARIO_NAMES
        assert len(scenarios) == 5

    def test_unknown_name(self):
        with pytest.raises(InputValidationError, match="Unknown scenario"):
            get_scenario("case-iv")

    @pytest.mark.parametrize("beta", [0.0, -2.0, np.inf])
    def test_invalid_beta(self, beta):
        with pytest.raises(InputValidationError):
            catalog(beta=beta)

    def test_unital_damping_has_infinite_temperature_steady_state(self):
        for s in catalog():
            assert s.beta_eff == 0.0

    def test_pure_start_skips_initial_point(self):
        s = get_scenario("case-ii")
        assert s.analysis_start == pytest.approx(1e-3)
        assert get_scenario("case-iii").analysis_start is None

    def test_thermal_start_is_gibbs(self):
        s = get_scenario("case-i", beta=2.0)
        np.testing.assert_allclose(np.diag(s.initial_state).real, [np.exp(-2) / (2 * np.cosh(2)), np.exp(2) / (2 * np.cosh(2))])

    def test_convention_halves_the_gap(self):
        assert get_scenario("case-iii", convention="sz-half", omega0=2.0).level_scale == pytest.approx(1.0)

    def test_with_window(self):
        s = get_scenario("unitary").with_window(tf=2.0)
        assert (s.t0, s.tf) == (0.0, 2.0)
        with pytest.raises(InputValidationError):
            get_scenario("unitary").with_window(t0=3.0, tf=2.0)

    def test_summary(self):
        summary = get_scenario("driven-ramp").summary()
        assert summary["ramp_rate"] == 0.1
        assert summary["oracles"] == {"state": False, "eigenvalues": False, "eigenvectors": False, "rates": False}


class TestAnalyticReference:
    @pytest.mark.parametrize("name", ["case-i", "case-ii", "case-iii", "unitary"])
    def test_initial_state(self, name):
        s = get_scenario(name)
        np.testing.assert_allclose(analytic_reference(s, 0.0).state, s.initial_state, atol=1e-14)

    def test_thermal_populations(self, test_config):
        ref = analytic_reference(get_scenario("case-i"), 1.0)
        np.testing.assert_allclose(np.diag(ref.state).real, test_config["thermal_populations_t1"], atol=1e-5)
        assert ref.state[0, 1] == 0

    def test_states_are_densities(self):
        s = get_scenario("case-iii")
        for t in (0.5, 3.0, 10.0):
            ref = analytic_reference(s, t)
            assert np.trace(ref.state).real == pytest.approx(1.0)
            assert np.all(ref.eigenvalues > 0)
            np.testing.assert_allclose((ref.eigenvectors * ref.eigenvalues) @ ref.eigenvectors.conj().T, ref.state, atol=1e-14)

    def test_matches_propagated_spectrum(self, scenario_run):
        s, _, flow, _ = scenario_run("case-iii", every=100)
        for frame in flow.frames:
            ref = analytic_reference(s, frame.t)
            np.testing.assert_allclose(frame.r, ref.eigenvalues, atol=1e-10)
            overlaps = np.abs(np.sum(ref.eigenvectors.conj() * frame.V, axis=0))
            np.testing.assert_allclose(overlaps, 1.0, atol=1e-8)

    def test_no_oracle_for_driven_ramp(self):
        with pytest.raises(OracleUnavailableError):
            analytic_reference(get_scenario("driven-ramp"), 1.0)

    def test_time_outside_window(self):
        with pytest.raises(InputValidationError):
            analytic_reference(get_scenario("case-iii"), 11.0)

    def test_unitary_keeps_spectrum(self):
        s = get_scenario("unitary")
        np.testing.assert_allclose(analytic_reference(s, 7.3).eigenvalues, analytic_reference(s, 0.0).eigenvalues)


class TestPureStart:
    @pytest.mark.parametrize("gamma,h", [(0.1, 1.0), (0.1, 0.5), (3.0, 0.5), (1.0, 0.5)])
    def test_closed_forms_agree_with_general_solution(self, gamma, h):
        for t in (0.0, 0.2, 1.7, 6.0):
            c = pure_start_coherence(gamma, h, t)
            assert c == pytest.approx(coherence(0.5 + 0j, gamma, h, t), abs=1e-14)
            np.testing.assert_allclose(pure_start_eigenvalues(gamma, h, t), qubit_eigenvalues(0.0, c), atol=1e-12)
            if t > 0:
                np.testing.assert_allclose(pure_start_eigenvectors(gamma, h, t), qubit_eigenvectors(0.0, c), atol=1e-12)

    def test_critical_damping_is_continuous(self):
        # gamma = 2h exactly
        exact = pure_start_eigenvalues(1.0, 0.5, 0.8)
        nearby = pure_start_eigenvalues(1.0, 0.5 + 1e-4, 0.8)
        np.testing.assert_allclose(exact, nearby, atol=1e-4)
        expected = 0.5 * np.exp(-0.8) * np.sqrt(1 + 2 * 0.8 + 2 * 0.64)
        assert exact[1] == pytest.approx(0.5 + expected)

    def test_rank_deficient_at_start(self):
        assert pure_start_eigenvalues(0.1, 1.0, 0.0)[0] == pytest.approx(0.0, abs=1e-15)

    def test_small_time_growth_of_smallest_eigenvalue(self):
        t = 1e-3
        assert pure_start_eigenvalues(0.1, 1.0, t)[0] == pytest.approx(4 * 0.1 * t**3 / 3, rel=1e-3)


class TestEnergyBudget:
    def test_internal_energy_change(self):
        budget = energy_budget_oracle(0.1, 1.0, 1.0, 10.0, "sz-half")
        assert budget["U"] == pytest.approx(0.5 * 0.5 * (np.exp(-2.0) - 1.0), abs=1e-9)
        assert budget["U"] == pytest.approx(budget["Q_tbsta"] + budget["W_tbsta"], abs=1e-9)

    def test_every_total_near_published_values(self, thresholds):
        budget = energy_budget_oracle(0.1, 1.0, 1.0, 10.0, "sz-half")
        published = published_energy_budget()
        for key in ("U", "Q_tbsta", "W_tbsta"):
            assert budget[key] == pytest.approx(published[key], abs=thresholds["budget_published"]), key
        assert budget["Q_tbsta"] == pytest.approx(-0.1429, abs=1e-3)
        assert budget["W_tbsta"] == pytest.approx(-0.0732, abs=1e-3)

    def test_published_values_are_a_copy(self):
        published = published_energy_budget()
        published["U"] = 0.0
        assert published_energy_budget()["U"] == -0.25
