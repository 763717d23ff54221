#pragma once

// Mission pipeline: orbits, connection, local transfers and the full mission
// solve for a scenario. Each step is available in memory and as a CLI stage
// that reads its prerequisites from, and writes its artifacts to, an output
// directory.

#include <Eigen/Core>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lowthrust/connections.hpp"
#include "lowthrust/extremals.hpp"
#include "lowthrust/mshoot.hpp"
#include "lowthrust/scenario.hpp"

namespace lowthrust {

struct OrbitPair {
  PeriodicOrbit departure;  // about L1
  PeriodicOrbit arrival;    // about L2
};

// Corrected seed orbits: small Lyapunov orbits, or Halo orbits of the seed
// (or requested) z-excursion.
OrbitPair seed_orbits(const Scenario& sc);
// Mission orbits: the seeds continued to the scenario energies.
OrbitPair mission_orbits(const Scenario& sc, const OrbitPair& seeds, FamilyReport* dep = nullptr,
                         FamilyReport* arr = nullptr);

// Zero-control skeleton between the orbits: a heteroclinic (Lyapunov
// missions) or the closest approach of the two manifold cuts (Halo missions).
struct Connection {
  double departure_phase = 0.0;  // orbit phase of the departure seed
  double arrival_phase = 0.0;    // orbit phase of the arrival seed
  Eigen::VectorXd departure_seed;
  Eigen::VectorXd arrival_seed;
  double time_unstable = 0.0;  // departure seed to section
  double time_stable = 0.0;    // section to arrival seed
  double total_time = 0.0;     // uncontrolled flight time, seed to seed
  double mission_time = 0.0;   // total_time plus the two orbit anchor times
  // Heteroclinic only.
  double junction_mismatch = 0.0;
  double windings = 0.0;
  int revolutions = 0;
  // Bridged (Halo) only: section points of the two manifolds and their gap.
  bool bridged = false;
  Eigen::VectorXd bridge_point_1;
  Eigen::VectorXd bridge_point_2;
  double gap = 0.0;
  int fiber_1 = 0;
  int fiber_2 = 0;
  // Uncontrolled paths kept in memory: the heteroclinic, or the two manifold
  // fibers of a bridged connection.
  std::vector<Trajectory<Eigen::Dynamic>> pieces;
};

Connection connect_orbits(const Scenario& sc, const OrbitPair& orbits);

struct LocalLeg {
  std::string role;  // "departure", "bridge" or "arrival"
  Anchors anchors;
  TransferSolution solution;
  ArcCosts costs;
};

// Local transfers at the starting thrust, solved in mission order so that
// each leg starts with the mass left by the previous one.
std::vector<LocalLeg> solve_local_legs(const Scenario& sc, const OrbitPair& orbits, const Connection& c);

struct MissionRun {
  InitialGuess guess;
  double initial_residual = 0.0;         // infinity norm at the assembled Z
  double initial_matching_residual = 0.0;  // state and mass rows only
  MissionSolution start;       // at the starting thrust
  ThrustContinuationReport continuation;
  MissionSolution fixed;       // at the target thrust, endpoints as constructed
  Eigen::Vector2d fixed_transversality = Eigen::Vector2d::Zero();
  TerminalReport terminal;
  MissionSolution optimized;   // equal to fixed when optimization is disabled
  TurnpikeCheck turnpike_fixed;
  TurnpikeCheck turnpike;
  double seconds_solve = 0.0;
  double seconds_continuation = 0.0;
  double seconds_terminal = 0.0;
};

MissionRun run_mission(const Scenario& sc, const OrbitPair& orbits, const Connection& c,
                       const std::vector<LocalLeg>& legs, std::ostream* log = nullptr);

enum class Stage { lagrange, orbit, family, manifold, heteroclinic, transfer, mission };

std::string stage_name(Stage s);
// Throws ScenarioError for unknown names.
Stage parse_stage(const std::string& s);

// A prerequisite artifact is missing from the output directory.
class MissingArtifact : public Error {
 public:
  MissingArtifact(const std::string& what, Stage needed) : Error(what), needed_(needed) {}
  Stage needed() const { return needed_; }

 private:
  Stage needed_;
};

// A stage failed; the message embeds the solver report.
class StageFailure : public Error {
 public:
  StageFailure(const std::string& what, Stage stage) : Error(what), stage_(stage) {}
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

struct StageOutcome {
  std::vector<std::filesystem::path> artifacts;
  double seconds = 0.0;
};

// Runs one stage. The mission stage chains every stage before it. Writes
// <stage>.json (deterministic summary), run_<stage>.json (wall time and
// settings) and the stage CSV files into `out`. Throws MissingArtifact,
// ScenarioError or StageFailure.
StageOutcome run_stage(const Scenario& sc, Stage stage, const std::filesystem::path& out,
                       std::ostream* log = nullptr);

}  // namespace lowthrust
