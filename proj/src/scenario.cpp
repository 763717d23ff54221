#include "lowthrust/scenario.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace lowthrust {

std::string mission_kind_name(MissionKind k) {
  switch (k) {
    case MissionKind::lyapunov_1rev: return "lyapunov-lyapunov-1rev";
    case MissionKind::lyapunov_2rev: return "lyapunov-lyapunov-2rev";
    case MissionKind::halo_halo: return "halo-halo";
  }
  return "";
}

MissionKind parse_mission_kind(const std::string& s) {
  for (auto k : {MissionKind::lyapunov_1rev, MissionKind::lyapunov_2rev, MissionKind::halo_halo})
    if (s == mission_kind_name(k)) return k;
  throw ScenarioError("unknown mission kind '" + s +
                      "' (expected lyapunov-lyapunov-1rev, lyapunov-lyapunov-2rev or halo-halo)");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size() || !std::isfinite(x))
    throw ScenarioError("key '" + key + "' expects a number, got '" + v + "'");
  return x;
}

double to_positive(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (!(x > 0)) throw ScenarioError("key '" + key + "' must be positive, got '" + v + "'");
  return x;
}

int to_count(const std::string& key, const std::string& v, int min) {
  const double x = to_double(key, v);
  if (x != std::floor(x) || x < min || x > 1e7)
    throw ScenarioError("key '" + key + "' expects an integer >= " + std::to_string(min) + ", got '" + v + "'");
  return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ScenarioError("key '" + key + "' expects true or false, got '" + v + "'");
}

using Setter = std::function<void(Scenario&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"mission.name", [](Scenario& s, auto&, auto& v) { s.name = v; }},
      {"mission.kind", [](Scenario& s, auto&, auto& v) { s.kind = parse_mission_kind(v); }},
      {"mission.energy_nd", [](Scenario& s, auto& k, auto& v) { s.energy = to_double(k, v); }},
      {"mission.energy1_nd", [](Scenario& s, auto& k, auto& v) { s.energy1 = to_double(k, v); }},
      {"mission.energy2_nd", [](Scenario& s, auto& k, auto& v) { s.energy2 = to_double(k, v); }},
      {"mission.z1_km", [](Scenario& s, auto& k, auto& v) { s.z1_km = to_positive(k, v); }},
      {"mission.z2_km", [](Scenario& s, auto& k, auto& v) { s.z2_km = to_positive(k, v); }},
      {"system.mu_nd", [](Scenario& s, auto& k, auto& v) { s.system.mu = to_positive(k, v); }},
      {"system.l_star_m", [](Scenario& s, auto& k, auto& v) { s.system.l_star = to_positive(k, v); }},
      {"system.v_star_m_s", [](Scenario& s, auto& k, auto& v) { s.system.v_star = to_positive(k, v); }},
      {"system.t_star_s", [](Scenario& s, auto& k, auto& v) { s.system.t_star = to_positive(k, v); }},
      {"system.isp_s", [](Scenario& s, auto& k, auto& v) { s.system.isp = to_positive(k, v); }},
      {"system.g0_m_s2", [](Scenario& s, auto& k, auto& v) { s.system.g0 = to_positive(k, v); }},
      {"system.mass_kg", [](Scenario& s, auto& k, auto& v) { s.system.m0 = to_positive(k, v); }},
      {"orbit.lyapunov_seed_amplitude_nd",
       [](Scenario& s, auto& k, auto& v) { s.lyapunov_seed_amplitude = to_positive(k, v); }},
      {"orbit.halo_seed_z_km", [](Scenario& s, auto& k, auto& v) { s.halo_seed_z_km = to_positive(k, v); }},
      {"family.steps", [](Scenario& s, auto& k, auto& v) { s.family_steps = to_count(k, v, 1); }},
      {"manifold.alpha_nd", [](Scenario& s, auto& k, auto& v) { s.alpha = to_positive(k, v); }},
      {"manifold.fibers", [](Scenario& s, auto& k, auto& v) { s.fibers = to_count(k, v, 4); }},
      {"manifold.horizon_nd", [](Scenario& s, auto& k, auto& v) { s.horizon = to_positive(k, v); }},
      {"manifold.section",
       [](Scenario& s, auto& k, auto& v) {
         if (v == "U2")
           s.section = Section::U2;
         else if (v == "U3")
           s.section = Section::U3;
         else
           throw ScenarioError("key '" + k + "' expects U2 or U3, got '" + v + "'");
       }},
      {"manifold.crossing_unstable", [](Scenario& s, auto& k, auto& v) { s.crossing_unstable = to_count(k, v, 1); }},
      {"manifold.crossing_stable", [](Scenario& s, auto& k, auto& v) { s.crossing_stable = to_count(k, v, 1); }},
      {"anchors.orbit_time_nd", [](Scenario& s, auto& k, auto& v) { s.anchor_orbit_time = to_positive(k, v); }},
      {"anchors.manifold_time_nd",
       [](Scenario& s, auto& k, auto& v) { s.anchor_manifold_time = to_positive(k, v); }},
      {"anchors.bridge_time_nd", [](Scenario& s, auto& k, auto& v) { s.bridge_time = to_positive(k, v); }},
      {"transfer.steps", [](Scenario& s, auto& k, auto& v) { s.transfer_steps = to_count(k, v, 1); }},
      {"mshoot.extra_nodes", [](Scenario& s, auto& k, auto& v) { s.extra_nodes = to_count(k, v, 0); }},
      {"mshoot.max_iterations", [](Scenario& s, auto& k, auto& v) { s.max_iterations = to_count(k, v, 1); }},
      {"mshoot.residual_tol_nd", [](Scenario& s, auto& k, auto& v) { s.residual_tol = to_positive(k, v); }},
      {"thrust.start_newtons", [](Scenario& s, auto& k, auto& v) { s.thrust_start = to_positive(k, v); }},
      {"thrust.target_newtons", [](Scenario& s, auto& k, auto& v) { s.thrust_target = to_positive(k, v); }},
      {"thrust.steps", [](Scenario& s, auto& k, auto& v) { s.thrust_steps = to_count(k, v, 1); }},
      {"terminal.tol_nd", [](Scenario& s, auto& k, auto& v) { s.terminal_tol = to_positive(k, v); }},
      {"terminal.max_rounds", [](Scenario& s, auto& k, auto& v) { s.terminal_max_rounds = to_count(k, v, 1); }},
      {"terminal.optimize", [](Scenario& s, auto& k, auto& v) { s.optimize_terminal = to_bool(k, v); }},
      {"output.dir", [](Scenario& s, auto&, auto& v) { s.output_dir = v; }},
  };
  return table;
}

}  // namespace

void set_scenario_key(Scenario& s, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ScenarioError("unknown key '" + key + "'");
  if (value.empty()) throw ScenarioError("key '" + key + "' has an empty value");
  it->second(s, key, value);
}

void Scenario::validate() const {
  try {
    system.validate();
  } catch (const PreconditionError& e) {
    throw ScenarioError(std::string("system block: ") + e.what());
  }
  if (spatial()) {
    if (energy) throw ScenarioError("halo-halo missions take mission.energy1_nd / energy2_nd, not mission.energy_nd");
    if (energy1.has_value() == z1_km.has_value())
      throw ScenarioError("halo-halo missions need exactly one of mission.energy1_nd and mission.z1_km");
    if (energy2.has_value() == z2_km.has_value())
      throw ScenarioError("halo-halo missions need exactly one of mission.energy2_nd and mission.z2_km");
  } else {
    if (!energy) throw ScenarioError("Lyapunov missions need mission.energy_nd");
    if (energy1 || energy2 || z1_km || z2_km)
      throw ScenarioError("mission.energy1_nd, energy2_nd, z1_km and z2_km only apply to halo-halo missions");
  }
  if (thrust_target > thrust_start) throw ScenarioError("thrust.target_newtons must not exceed thrust.start_newtons");
  if (!spatial() && 2.0 * anchor_manifold_time >= horizon)
    throw ScenarioError("anchors.manifold_time_nd is too long for manifold.horizon_nd");
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  Scenario s;
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = origin + ":" + std::to_string(lineno) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ScenarioError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (seen.count(key)) throw ScenarioError(where + "key '" + key + "' repeated (first on line " +
                                             std::to_string(seen[key]) + ")");
    seen[key] = lineno;
    try {
      set_scenario_key(s, key, value);
    } catch (const ScenarioError& e) {
      throw ScenarioError(where + e.what());
    }
  }
  try {
    s.validate();
  } catch (const ScenarioError& e) {
    throw ScenarioError(origin + ": " + e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ScenarioError("cannot read scenario file " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

}  // namespace lowthrust
