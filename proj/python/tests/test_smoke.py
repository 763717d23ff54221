import json
import math

import numpy as np
import pytest

import lowthrust as lt


@pytest.fixture(scope="module")
def params():
    return lt.SystemParams()


def test_lagrange_points_are_equilibria(params):
    pts = lt.lagrange_points(params.mu)
    assert len(pts) == 5
    for q in pts:
        # an equilibrium stays put under the flow
        assert np.max(np.abs(lt.flow(params, q, 1.0) - q)) < 1e-9


def test_thrust_coefficient(params):
    eps = params.epsilon_for(60.0)
    assert eps == pytest.approx(60.0 * params.t_star**2 / (4 * math.pi**2 * params.l_star), rel=1e-15)


def test_lyapunov_orbit_and_monodromy(params):
    orbit = lt.lyapunov_orbit(params, 1, 0.005)
    assert orbit.center == 1
    assert lt.closure_error(params, orbit) < 1e-9
    m = lt.monodromy(params, orbit)
    assert abs(np.linalg.det(m) - 1.0) < 1e-6
    target = lt.continue_to_energy(params, orbit, -1.5890, 30)
    assert target.energy == pytest.approx(-1.5890, abs=1e-12)
    assert lt.energy(params, target.initial_state) == pytest.approx(-1.5890, abs=1e-12)


def test_heteroclinic(params):
    o1 = lt.continue_to_energy(params, lt.lyapunov_orbit(params, 1, 0.005), -1.5890, 30)
    o2 = lt.continue_to_energy(params, lt.lyapunov_orbit(params, 2, 0.005), -1.5890, 30)
    h = lt.find_heteroclinic(params, o1, o2, 2, 2, 20.0)
    assert h["revolutions"] == 2
    assert h["junction_mismatch"] < 1e-9
    assert h["total_time"] == pytest.approx(h["time_unstable"] + h["time_stable"], rel=1e-12)


def test_control_law_saturates(params):
    eps = params.epsilon_for(60.0)
    e = np.zeros(10)
    e[0] = 0.85
    e[4] = 1500.0
    e[7] = 1e6  # large velocity costate
    u, psi = lt.control_law(params, e, eps)
    assert psi > 1.0
    assert np.linalg.norm(u) == pytest.approx(1.0)
    e[5:] = 0.0
    u, psi = lt.control_law(params, e, eps)
    assert np.linalg.norm(u) == 0.0


def test_scenario_errors():
    with pytest.raises(lt.ScenarioError):
        lt.parse_scenario("mission.colour = red\n")
    sc = lt.parse_scenario("mission.kind = lyapunov-lyapunov-1rev\nmission.energy_nd = -1.58\n")
    assert sc.kind == "lyapunov-lyapunov-1rev"
    assert sc.energy == -1.58
    with pytest.raises(lt.ScenarioError):
        sc.set("thrust.target_newtons", "-1")
    assert issubclass(lt.ScenarioError, lt.Error)


def test_run_stage(tmp_path):
    sc = lt.parse_scenario("mission.kind = lyapunov-lyapunov-1rev\nmission.energy_nd = -1.58\n")
    assert "heteroclinic" in lt.stages()
    paths = lt.run_stage(sc, "lagrange", tmp_path)
    doc = json.loads((tmp_path / "lagrange.json").read_text())
    assert len(doc["points"]) == 5
    assert any(str(p).endswith("lagrange.json") for p in paths)
    with pytest.raises(lt.Error):
        lt.run_stage(sc, "heteroclinic", tmp_path / "empty")
