#include "lowthrust/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lowthrust/extremals.hpp"

namespace lowthrust {

Json tagged(double value, const char* u) { return Json{{"value", value}, {"unit", u}}; }

Json tagged(const Eigen::VectorXd& value, const char* u) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < value.size(); ++i) arr.push_back(value[i]);
  return Json{{"value", std::move(arr)}, {"unit", u}};
}

namespace {

const Json& field(const Json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key)) throw Error("artifact field '" + key + "' is missing");
  const Json& f = j.at(key);
  if (!f.is_object() || !f.contains("value") || !f.contains("unit"))
    throw Error("artifact field '" + key + "' is not a tagged number");
  return f.at("value");
}

}  // namespace

double untag(const Json& j, const std::string& key) {
  const Json& v = field(j, key);
  if (!v.is_number()) throw Error("artifact field '" + key + "' is not a number");
  return v.get<double>();
}

Eigen::VectorXd untag_vector(const Json& j, const std::string& key) {
  const Json& v = field(j, key);
  if (!v.is_array()) throw Error("artifact field '" + key + "' is not a vector");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  return out;
}

Json make_document(const std::string& artifact) {
  Json d;
  d["format_version"] = kFormatVersion;
  d["artifact"] = artifact;
  return d;
}

void write_json(const std::filesystem::path& path, const Json& doc) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << doc.dump(2) << '\n';
  if (!f) throw Error("failed writing " + path.string());
}

Json read_json(const std::filesystem::path& path, const std::string& artifact) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read " + path.string());
  Json d;
  try {
    d = Json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed JSON in " + path.string() + ": " + e.what());
  }
  if (!d.contains("format_version") || d["format_version"] != kFormatVersion)
    throw Error(path.string() + ": unsupported format version");
  if (d.value("artifact", "") != artifact)
    throw Error(path.string() + ": expected a '" + artifact + "' artifact");
  return d;
}

Json orbit_to_json(const SystemParams& p, const PeriodicOrbit& orbit) {
  Json j;
  j["center"] = tagged(orbit.center, unit::count);
  j["dimension"] = tagged(orbit.initial_state.size(), unit::count);
  j["initial_state"] = tagged(orbit.initial_state, unit::normalized);
  j["period"] = tagged(orbit.period, unit::normalized);
  j["period_days"] = tagged(time_to_days(p, orbit.period), "day");
  j["energy"] = tagged(orbit.energy, unit::normalized);
  j["closure_error"] = tagged(closure_error(p, orbit), unit::normalized);
  j["half_period_residual"] = tagged(half_period_residual(p, orbit).lpNorm<Eigen::Infinity>(), unit::normalized);
  if (orbit.initial_state.size() == 6) j["z0_km"] = tagged(orbit.initial_state[2] * p.l_star / 1e3, unit::km);
  return j;
}

PeriodicOrbit orbit_from_json(const Json& j) {
  PeriodicOrbit o;
  o.initial_state = untag_vector(j, "initial_state");
  o.period = untag(j, "period");
  o.energy = untag(j, "energy");
  o.center = static_cast<int>(untag(j, "center"));
  dimension_of_state(o.initial_state.size());
  return o;
}

Json connection_to_json(const SystemParams& p, const Connection& c) {
  Json j;
  j["bridged"] = c.bridged;
  j["departure_phase"] = tagged(c.departure_phase, unit::normalized);
  j["arrival_phase"] = tagged(c.arrival_phase, unit::normalized);
  j["departure_seed"] = tagged(c.departure_seed, unit::normalized);
  j["arrival_seed"] = tagged(c.arrival_seed, unit::normalized);
  j["time_unstable"] = tagged(c.time_unstable, unit::normalized);
  j["time_stable"] = tagged(c.time_stable, unit::normalized);
  j["total_time"] = tagged(c.total_time, unit::normalized);
  j["total_time_days"] = tagged(time_to_days(p, c.total_time), "day");
  j["mission_time"] = tagged(c.mission_time, unit::normalized);
  if (c.bridged) {
    j["gap"] = tagged(c.gap, unit::normalized);
    j["bridge_point_1"] = tagged(c.bridge_point_1, unit::normalized);
    j["bridge_point_2"] = tagged(c.bridge_point_2, unit::normalized);
    j["fiber_1"] = tagged(c.fiber_1, unit::count);
    j["fiber_2"] = tagged(c.fiber_2, unit::count);
  } else {
    j["junction_mismatch"] = tagged(c.junction_mismatch, unit::normalized);
    j["windings"] = tagged(c.windings, "revolution");
    j["revolutions"] = tagged(c.revolutions, unit::count);
  }
  return j;
}

Connection connection_from_json(const Json& j) {
  Connection c;
  c.bridged = j.at("bridged").get<bool>();
  c.departure_phase = untag(j, "departure_phase");
  c.arrival_phase = untag(j, "arrival_phase");
  c.departure_seed = untag_vector(j, "departure_seed");
  c.arrival_seed = untag_vector(j, "arrival_seed");
  c.time_unstable = untag(j, "time_unstable");
  c.time_stable = untag(j, "time_stable");
  c.total_time = untag(j, "total_time");
  c.mission_time = untag(j, "mission_time");
  if (c.bridged) {
    c.gap = untag(j, "gap");
    c.bridge_point_1 = untag_vector(j, "bridge_point_1");
    c.bridge_point_2 = untag_vector(j, "bridge_point_2");
    c.fiber_1 = static_cast<int>(untag(j, "fiber_1"));
    c.fiber_2 = static_cast<int>(untag(j, "fiber_2"));
  } else {
    c.junction_mismatch = untag(j, "junction_mismatch");
    c.windings = untag(j, "windings");
    c.revolutions = static_cast<int>(untag(j, "revolutions"));
  }
  return c;
}

Json leg_to_json(const LocalLeg& leg, double thrust_newtons) {
  const auto& s = leg.solution;
  const int n = static_cast<int>(leg.anchors.start.size());
  Json j;
  j["role"] = leg.role;
  j["thrust"] = tagged(thrust_newtons, unit::newton);
  j["epsilon"] = tagged(s.epsilon, unit::normalized);
  j["duration"] = tagged(s.duration, unit::normalized);
  j["start"] = tagged(leg.anchors.start, unit::normalized);
  j["end"] = tagged(leg.anchors.end, unit::normalized);
  j["orbit_phase"] = tagged(leg.anchors.orbit_phase, unit::normalized);
  j["costate0"] = tagged(s.costate0, unit::normalized);
  j["initial"] = tagged(s.initial, unit::normalized);
  j["final"] = tagged(s.final, unit::normalized);
  j["initial_mass"] = tagged(s.initial[n], unit::kg);
  j["final_mass"] = tagged(s.final[n], unit::kg);
  j["final_mass_costate"] = tagged(s.final[2 * n + 1], unit::normalized);
  j["residual_norm"] = tagged(s.residual_norm, unit::normalized);
  j["iterations"] = tagged(s.iterations, unit::count);
  j["continuation_steps"] = tagged(s.continuation_steps, unit::count);
  j["refinements"] = tagged(s.refinements, unit::count);
  j["condition_estimate"] = tagged(s.condition_estimate, unit::ratio);
  j["cost1"] = tagged(leg.costs.cost1, unit::normalized);
  j["cost2"] = tagged(leg.costs.cost2, unit::normalized);
  j["cost3"] = tagged(leg.costs.cost3, unit::cost3);
  j["fuel"] = tagged(leg.costs.fuel, unit::kg);
  j["max_control"] = tagged(leg.costs.max_control, unit::ratio);
  j["hamiltonian_drift"] = tagged(leg.costs.hamiltonian_drift, unit::normalized);
  return j;
}

LocalLeg leg_from_json(const Json& j) {
  LocalLeg leg;
  leg.role = j.at("role").get<std::string>();
  auto& s = leg.solution;
  s.epsilon = untag(j, "epsilon");
  s.duration = untag(j, "duration");
  s.costate0 = untag_vector(j, "costate0");
  s.initial = untag_vector(j, "initial");
  s.final = untag_vector(j, "final");
  s.residual_norm = untag(j, "residual_norm");
  s.iterations = static_cast<int>(untag(j, "iterations"));
  s.continuation_steps = static_cast<int>(untag(j, "continuation_steps"));
  s.refinements = static_cast<int>(untag(j, "refinements"));
  s.condition_estimate = untag(j, "condition_estimate");
  leg.anchors.start = untag_vector(j, "start");
  leg.anchors.end = untag_vector(j, "end");
  leg.anchors.duration = s.duration;
  leg.anchors.orbit_phase = untag(j, "orbit_phase");
  leg.costs.cost1 = untag(j, "cost1");
  leg.costs.cost2 = untag(j, "cost2");
  leg.costs.cost3 = untag(j, "cost3");
  leg.costs.fuel = untag(j, "fuel");
  leg.costs.max_control = untag(j, "max_control");
  leg.costs.hamiltonian_drift = untag(j, "hamiltonian_drift");
  return leg;
}

Json costs_to_json(const MissionCosts& c) {
  Json j;
  j["cost1"] = tagged(c.cost1, unit::normalized);
  j["cost2"] = tagged(c.cost2, unit::normalized);
  j["cost3"] = tagged(c.cost3, unit::cost3);
  j["fuel"] = tagged(c.fuel, unit::kg);
  j["max_control"] = tagged(c.max_control, unit::ratio);
  j["hamiltonian_drift"] = tagged(c.hamiltonian_drift, unit::normalized);
  return j;
}

Json mission_to_json(const SystemParams& p, const MissionSolution& s) {
  Json j;
  j["thrust"] = tagged(s.thrust_newtons, unit::newton);
  j["epsilon"] = tagged(s.structure.epsilon, unit::normalized);
  j["initial_mass"] = tagged(s.structure.mass, unit::kg);
  j["final_mass"] = tagged(s.final_mass(), unit::kg);
  j["durations"] = tagged(Eigen::Map<const Eigen::VectorXd>(s.structure.durations.data(),
                                                            static_cast<Eigen::Index>(s.structure.durations.size())),
                          unit::normalized);
  j["total_time"] = tagged(s.structure.total_time(), unit::normalized);
  j["total_time_days"] = tagged(time_to_days(p, s.structure.total_time()), "day");
  j["nodes"] = tagged(s.structure.nodes(), unit::count);
  j["z_size"] = tagged(s.z.size(), unit::count);
  j["z"] = tagged(s.z, unit::normalized);
  j["start"] = tagged(s.structure.start, unit::normalized);
  j["target"] = tagged(s.structure.target, unit::normalized);
  j["departure_phase"] = tagged(s.departure_phase, unit::normalized);
  j["arrival_phase"] = tagged(s.arrival_phase, unit::normalized);
  j["residual_norm"] = tagged(s.residual_norm, unit::normalized);
  j["iterations"] = tagged(s.iterations, unit::count);
  j["condition_estimate"] = tagged(s.condition_estimate, unit::ratio);
  j["costs"] = costs_to_json(s.costs);
  return j;
}

namespace {

void put(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

std::string csv_header() { return "t,x,y,z,vx,vy,vz,m,ux,uy,uz,u_norm,H"; }

std::string csv_line(const CsvRow& row) {
  const Eigen::Index n = row.state.size();
  if (n != 4 && n != 6) throw PreconditionError("CSV rows need a state of size 4 or 6");
  const int d = static_cast<int>(n / 2);
  std::string out;
  put(out, row.t);
  for (int part = 0; part < 2; ++part) {
    for (int i = 0; i < 3; ++i) {
      out += ',';
      if (i < d) put(out, row.state[part * d + i]);
    }
  }
  out += ',';
  if (row.mass) put(out, *row.mass);
  for (int i = 0; i < 3; ++i) {
    out += ',';
    if (row.control && i < row.control->size()) put(out, (*row.control)[i]);
  }
  out += ',';
  if (row.control) put(out, row.control->norm());
  out += ',';
  if (row.hamiltonian) put(out, *row.hamiltonian);
  return out;
}

void write_csv(const std::filesystem::path& path, const std::vector<CsvRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << csv_header() << '\n';
  for (const auto& r : rows) f << csv_line(r) << '\n';
  if (!f) throw Error("failed writing " + path.string());
}

std::vector<CsvRow> orbit_rows(const SystemParams& p, const PeriodicOrbit& orbit, int n_samples) {
  const auto tr = propagate<Eigen::Dynamic>(CrtbpField<Eigen::Dynamic>{p.mu}, Vec<Eigen::Dynamic>(orbit.initial_state), 0.0,
                            orbit.period, OdeOptions{});
  std::vector<CsvRow> rows;
  for (int i = 0; i <= n_samples; ++i) {
    CsvRow r;
    r.t = orbit.period * i / n_samples;
    r.state = tr(r.t);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<CsvRow> trajectory_rows(const Trajectory<Eigen::Dynamic>& traj, int n_samples) {
  std::vector<CsvRow> rows;
  const double a = traj.t_start(), b = traj.t_end();
  for (int i = 0; i <= n_samples; ++i) {
    CsvRow r;
    r.t = a + (b - a) * i / n_samples;
    r.state = traj(r.t);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<CsvRow> mission_rows(const std::vector<MissionSample>& samples) {
  std::vector<CsvRow> rows;
  rows.reserve(samples.size());
  for (const auto& m : samples) {
    const int n = state_size_of_extremal(m.extremal.size());
    CsvRow r;
    r.t = m.t;
    r.state = m.extremal.head(n);
    r.mass = m.extremal[n];
    r.control = m.control;
    r.hamiltonian = m.hamiltonian;
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace lowthrust
