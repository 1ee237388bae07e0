"""
Built-in scenarios and their closed-form references.
"""

from trajthermo.scenarios.catalog import SCENARIO_NAMES, Scenario, catalog, get_scenario
from trajthermo.scenarios.oracles import analytic_reference

__all__ = ["SCENARIO_NAMES", "Scenario", "analytic_reference", "catalog", "get_scenario"]
