"""Low-thrust mission design in the Earth-Moon CRTBP."""

from ._core import (
    Error,
    PeriodicOrbit,
    Scenario,
    ScenarioError,
    SystemParams,
    closure_error,
    continue_to_energy,
    control_law,
    energy,
    find_heteroclinic,
    flow,
    halo_orbit,
    hamiltonian,
    lagrange_points,
    load_scenario,
    lyapunov_orbit,
    monodromy,
    parse_scenario,
    run_stage,
    stages,
)

__all__ = [
    "Error",
    "PeriodicOrbit",
    "Scenario",
    "ScenarioError",
    "SystemParams",
    "closure_error",
    "continue_to_energy",
    "control_law",
    "energy",
    "find_heteroclinic",
    "flow",
    "halo_orbit",
    "hamiltonian",
    "lagrange_points",
    "load_scenario",
    "lyapunov_orbit",
    "monodromy",
    "parse_scenario",
    "run_stage",
    "stages",
]
