#pragma once

// Mission scenarios: flat text files of dotted keys,
//
//   # comment
//   mission.kind = lyapunov-lyapunov-1rev
//   mission.energy_nd = -1.580
//   thrust.target_newtons = 0.3
//
// Key suffixes carry the unit: _nd (normalized), _km, _m, _s, _kg, _newtons,
// _m_s2. Unsuffixed keys are counts, names or switches.

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "lowthrust/crtbp.hpp"
#include "lowthrust/errors.hpp"
#include "lowthrust/manifolds.hpp"

namespace lowthrust {

// Malformed scenario: unknown key, bad value or inconsistent settings.
class ScenarioError : public Error {
 public:
  using Error::Error;
};

enum class MissionKind { lyapunov_1rev, lyapunov_2rev, halo_halo };

std::string mission_kind_name(MissionKind k);
MissionKind parse_mission_kind(const std::string& s);

struct Scenario {
  std::string name = "mission";
  MissionKind kind = MissionKind::lyapunov_1rev;
  SystemParams system = SystemParams::earth_moon();

  // Lyapunov missions: common energy of both orbits.
  std::optional<double> energy;
  // Halo missions: either target energies (continued from a seed Halo of
  // halo_seed_z_km) or z-excursions held fixed during correction.
  std::optional<double> energy1;
  std::optional<double> energy2;
  std::optional<double> z1_km;
  std::optional<double> z2_km;
  double lyapunov_seed_amplitude = 0.005;  // normalized x-excursion
  double halo_seed_z_km = 8000.0;
  int family_steps = 30;

  double alpha = 1.0 / 384402.0;
  int fibers = 100;  // manifold discretization per orbit
  double horizon = 20.0;
  Section section = Section::U2;
  int crossing_unstable = 1;
  int crossing_stable = 1;

  double anchor_orbit_time = 1.0;
  double anchor_manifold_time = 2.0;
  double bridge_time = 1.0;  // Halo missions: duration of the bridging transfer
  int transfer_steps = 20;

  int extra_nodes = 0;  // nodes inserted along each free arc
  int max_iterations = 40;
  double residual_tol = 1e-9;

  double thrust_start = 60.0;
  double thrust_target = 0.3;
  int thrust_steps = 22;

  double terminal_tol = 1e-8;
  int terminal_max_rounds = 4;
  bool optimize_terminal = true;

  std::string output_dir;  // empty: decided by the caller

  bool spatial() const { return kind == MissionKind::halo_halo; }
  // Throws ScenarioError.
  void validate() const;
};

// Parses scenario text; `origin` names the source in error messages.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

// Applies one key = value assignment with the same rules as the parser.
void set_scenario_key(Scenario& s, const std::string& key, const std::string& value);

}  // namespace lowthrust
