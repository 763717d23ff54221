// Python bindings: system constants, orbits, connections, the extremal
// control law and the scenario pipeline stages.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lowthrust/connections.hpp"
#include "lowthrust/extremals.hpp"
#include "lowthrust/manifolds.hpp"
#include "lowthrust/orbits.hpp"
#include "lowthrust/pipeline.hpp"
#include "lowthrust/scenario.hpp"

namespace py = pybind11;
using namespace lowthrust;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Low-thrust mission design in the Earth-Moon CRTBP";

  const auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<ScenarioError>(m, "ScenarioError", error.ptr());

  py::class_<SystemParams>(m, "SystemParams")
      .def(py::init<>())
      .def_readwrite("mu", &SystemParams::mu)
      .def_readwrite("l_star", &SystemParams::l_star)
      .def_readwrite("v_star", &SystemParams::v_star)
      .def_readwrite("t_star", &SystemParams::t_star)
      .def_readwrite("isp", &SystemParams::isp)
      .def_readwrite("g0", &SystemParams::g0)
      .def_readwrite("m0", &SystemParams::m0)
      .def_readwrite("tmax", &SystemParams::tmax)
      .def("time_unit", &SystemParams::time_unit)
      .def("epsilon_for", &SystemParams::epsilon_for, py::arg("thrust_newtons"))
      .def("beta_star", &SystemParams::beta_star);

  m.def("lagrange_points", [](double mu) {
    std::vector<Eigen::VectorXd> pts;
    for (const auto& q : lagrange_points(mu)) pts.emplace_back(q);
    return pts;
  }, py::arg("mu"));
  m.def("energy", py::overload_cast<const SystemParams&, const Eigen::VectorXd&>(&energy), py::arg("params"),
        py::arg("state"));
  m.def("flow", [](const SystemParams& p, const Eigen::VectorXd& s, double t) { return crtbp_flow(p.mu, s, 0.0, t); },
        py::arg("params"), py::arg("state"), py::arg("duration"));

  py::class_<PeriodicOrbit>(m, "PeriodicOrbit")
      .def_readonly("initial_state", &PeriodicOrbit::initial_state)
      .def_readonly("period", &PeriodicOrbit::period)
      .def_readonly("energy", &PeriodicOrbit::energy)
      .def_readonly("center", &PeriodicOrbit::center)
      .def("__repr__", [](const PeriodicOrbit& o) {
        return "<PeriodicOrbit L" + std::to_string(o.center) + " E=" + std::to_string(o.energy) +
               " T=" + std::to_string(o.period) + ">";
      });

  m.def("lyapunov_orbit", [](const SystemParams& p, int center, double amplitude) {
    return correct_orbit(p, richardson_guess(p, center, amplitude, Dimension::planar));
  }, py::arg("params"), py::arg("center"), py::arg("amplitude"),
        "Corrected planar Lyapunov orbit with the given x-amplitude (normalized).");
  m.def("halo_orbit", [](const SystemParams& p, int center, double z_amplitude) {
    return correct_orbit(p, richardson_guess(p, center, z_amplitude, Dimension::spatial), FixedCoordinate::z0);
  }, py::arg("params"), py::arg("center"), py::arg("z_amplitude"),
        "Corrected Halo orbit with z0 held at the given excursion (normalized).");
  m.def("continue_to_energy", [](const SystemParams& p, const PeriodicOrbit& o, double e, int steps) {
    return continue_family_energy(p, o, e, ContinuationSchedule::uniform(steps));
  }, py::arg("params"), py::arg("orbit"), py::arg("energy"), py::arg("steps") = 50);
  m.def("closure_error", [](const SystemParams& p, const PeriodicOrbit& o) { return closure_error(p, o); },
        py::arg("params"), py::arg("orbit"));
  m.def("monodromy", [](const SystemParams& p, const PeriodicOrbit& o) { return monodromy(p, o).matrix; },
        py::arg("params"), py::arg("orbit"));

  m.def("find_heteroclinic", [](const SystemParams& p, const PeriodicOrbit& o1, const PeriodicOrbit& o2,
                                int crossing_unstable, int crossing_stable, double horizon) {
    HeteroclinicOptions opt;
    opt.crossing_unstable = crossing_unstable;
    opt.crossing_stable = crossing_stable;
    opt.horizon = horizon;
    const auto h = find_heteroclinic(p, o1, o2, opt);
    py::dict d;
    d["total_time"] = h.total_time;
    d["time_unstable"] = h.time_unstable;
    d["time_stable"] = h.time_stable;
    d["departure_phase"] = h.departure_phase;
    d["arrival_phase"] = h.arrival_phase;
    d["junction_mismatch"] = h.junction_mismatch;
    d["windings"] = h.windings;
    d["revolutions"] = h.revolutions;
    return d;
  }, py::arg("params"), py::arg("orbit1"), py::arg("orbit2"), py::arg("crossing_unstable") = 1,
        py::arg("crossing_stable") = 1, py::arg("horizon") = 12.0);

  m.def("control_law", [](const SystemParams& p, const Eigen::VectorXd& e, double eps) {
    const auto c = control_law(p, e, eps);
    return py::make_tuple(c.u, c.psi);
  }, py::arg("params"), py::arg("extremal"), py::arg("epsilon"), "Returns (u, psi) maximizing H.");
  m.def("hamiltonian", [](const SystemParams& p, const Eigen::VectorXd& e, double eps) {
    return hamiltonian(p, e, eps);
  }, py::arg("params"), py::arg("extremal"), py::arg("epsilon"));

  py::class_<Scenario>(m, "Scenario")
      .def_readwrite("name", &Scenario::name)
      .def_property_readonly("kind", [](const Scenario& s) { return mission_kind_name(s.kind); })
      .def_readwrite("system", &Scenario::system)
      .def_readwrite("energy", &Scenario::energy)
      .def_readwrite("extra_nodes", &Scenario::extra_nodes)
      .def_readwrite("thrust_start", &Scenario::thrust_start)
      .def_readwrite("thrust_target", &Scenario::thrust_target)
      .def("set", [](Scenario& s, const std::string& key, const std::string& value) {
        set_scenario_key(s, key, value);
        s.validate();
      }, py::arg("key"), py::arg("value"), "Sets one key with the scenario-file syntax.");
  m.def("parse_scenario", &parse_scenario, py::arg("text"), py::arg("origin") = "<scenario>");
  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def("stages", [] {
    std::vector<std::string> names;
    for (auto s : {Stage::lagrange, Stage::orbit, Stage::family, Stage::manifold, Stage::heteroclinic,
                   Stage::transfer, Stage::mission})
      names.push_back(stage_name(s));
    return names;
  });
  m.def("run_stage", [](const Scenario& sc, const std::string& stage, const std::filesystem::path& out) {
    py::gil_scoped_release release;
    return run_stage(sc, parse_stage(stage), out).artifacts;
  }, py::arg("scenario"), py::arg("stage"), py::arg("out"),
        "Runs one stage and returns the written artifact paths.");
}
