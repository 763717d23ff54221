#pragma once

// Multiple shooting over a stitched admissible trajectory: the mission is a
// chain of legs joined at interior nodes, each leg an extremal arc. The
// unknown vector is
//
//   Z = (P0, X1, P1, ..., Xk, Pk)
//
// with P = (p, p_m) the costate blocks and X = (x, m) the node states. The
// residual stacks the node matching conditions, the final position-velocity
// target and the free-final-mass condition p_m(t_f) = 0.

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "lowthrust/extremals.hpp"
#include "lowthrust/newton.hpp"
#include "lowthrust/orbits.hpp"

namespace lowthrust {

struct MissionStructure {
  Eigen::VectorXd start;          // fixed initial state (4 or 6)
  double mass = 1500.0;           // initial mass, kg
  Eigen::VectorXd target;         // fixed final state
  std::vector<double> durations;  // one per leg; interior nodes = legs - 1
  double epsilon = 0.0;

  int n() const { return static_cast<int>(start.size()); }
  int nodes() const { return static_cast<int>(durations.size()) - 1; }
  double total_time() const;
  // Throws PreconditionError on inconsistent dimensions or durations.
  void validate() const;
};

// Offsets of the blocks of Z.
struct ShootingLayout {
  int n = 4;
  int nodes = 0;

  static ShootingLayout of(const MissionStructure& s) { return {s.n(), s.nodes()}; }
  Eigen::Index size() const { return (n + 1) + 2 * static_cast<Eigen::Index>(nodes) * (n + 1); }
  Eigen::Index costate(int node) const { return node == 0 ? 0 : (n + 1) + (2 * node - 1) * (n + 1); }
  Eigen::Index state(int node) const { return (n + 1) + 2 * (node - 1) * (n + 1); }
  // Extremal state at the beginning of a leg.
  Eigen::VectorXd leg_initial(const MissionStructure& s, const Eigen::VectorXd& z, int leg) const;
};

struct MultishootEvaluation {
  Eigen::VectorXd residual;
  std::vector<Eigen::VectorXd> leg_finals;  // extremal state at the end of each leg
  std::vector<bool> leg_failed;
  std::vector<std::string> failures;
};

// Evaluates every leg. A leg whose propagation fails leaves NaN in its rows.
MultishootEvaluation evaluate_multishoot(const SystemParams& p, const Eigen::VectorXd& z, const MissionStructure& s,
                                         const ExtremalOptions& opt = {});
Eigen::VectorXd multishoot_residual(const SystemParams& p, const Eigen::VectorXd& z, const MissionStructure& s,
                                    const ExtremalOptions& opt = {});

// Block central-difference Jacobian of multishoot_residual with respect to Z.
Eigen::MatrixXd multishoot_jacobian(const SystemParams& p, const Eigen::VectorXd& z, const MissionStructure& s,
                                    const ExtremalOptions& opt = {});

// A piece of the admissible trajectory: a solved local transfer or a free arc
// split into `legs` equal-time legs.
struct MissionSegment {
  std::optional<TransferSolution> transfer;
  double free_duration = 0.0;
  int legs = 1;

  static MissionSegment controlled(const TransferSolution& t) { return {t, 0.0, 1}; }
  static MissionSegment free(double duration, int legs = 1) { return {std::nullopt, duration, legs}; }
};

struct InitialGuess {
  MissionStructure structure;
  Eigen::VectorXd z;
};

// Stitches the segments: controlled legs keep their costates, free-arc nodes
// carry the propagated state with zero costate, and masses are carried across
// free arcs. The target is the end of the last segment. All transfers must
// share the same epsilon.
InitialGuess assemble_initial_Z(const SystemParams& p, const Eigen::VectorXd& start, double mass,
                                const std::vector<MissionSegment>& segments, const ExtremalOptions& opt = {});

struct MissionCosts {
  double cost1 = 0.0;  // integral of |u|^2
  double cost2 = 0.0;  // integral of (eps / m)^2 |u|^2
  double cost3 = 0.0;  // integral of (Tmax / m)^2 |u|^2 dt, N^2 kg^-2 s
  double fuel = 0.0;   // kg
  double max_control = 0.0;
  double hamiltonian_drift = 0.0;
};

struct MissionSolution {
  MissionStructure structure;
  Eigen::VectorXd z;
  double thrust_newtons = 0.0;
  // Terminal points as phase times on the departure and arrival orbits.
  double departure_phase = 0.0;
  double arrival_phase = 0.0;
  double residual_norm = 0.0;  // infinity norm of multishoot_residual
  int iterations = 0;
  double condition_estimate = 0.0;
  MissionCosts costs;
  double final_mass() const { return structure.mass - costs.fuel; }
};

struct MissionOptions {
  NewtonOptions newton{1e-11, 40, 30, 1e-7, false, 1};
  double residual_tol = 1e-9;  // accepted raw residual (infinity norm)
  ExtremalOptions extremal{};
};

// Unknowns are costates scaled to acceleration units, 2 m^2 / eps^2 for p and
// 2 m / (beta* eps^2) for p_m.
Eigen::VectorXd mission_costate_scale(const SystemParams& p, int n, double mass, double eps);

// Newton on the multiple shooting function with a block central-difference
// Jacobian. Throws NonConvergence carrying the best Z, with per-leg residual
// norms in the message.
MissionSolution solve_mission(const SystemParams& p, const Eigen::VectorXd& z0, const MissionStructure& s,
                              double thrust_newtons, const MissionOptions& opt = {});

// Running costs summed over the legs.
MissionCosts evaluate_costs(const SystemParams& p, const MissionStructure& s, const Eigen::VectorXd& z,
                            double thrust_newtons, const ExtremalOptions& opt = {});

struct ThrustContinuationReport {
  std::vector<double> thrusts;  // solved thrusts, starting with the initial one
  int steps = 0;
  int refinements = 0;
  int newton_iterations = 0;
};

// Homotopy eps(lambda) = (1 - lambda) eps(from) + lambda eps(to), re-solving
// the mission at every lambda. Throws ContinuationStall.
MissionSolution thrust_continuation(const SystemParams& p, const MissionSolution& solution, double thrust_to,
                                    const ContinuationSchedule& schedule = ContinuationSchedule::uniform(22),
                                    const MissionOptions& opt = {}, ThrustContinuationReport* report = nullptr);

// (r0, rf) = (<p(0), F0(x(0))>, <p(tf), F0(x(tf))>).
Eigen::Vector2d transversality_residual(const SystemParams& p, const MissionSolution& solution,
                                        const ExtremalOptions& opt = {});

struct TerminalOptions {
  double tol = 1e-8;          // target on |r0| and |rf|
  double step_fraction = 1.0 / 200.0;  // bracketing step as a fraction of the period
  double phase_tol = 1e-10;   // bisection stops below this phase interval
  int max_rounds = 4;         // arrival / departure alternations
  MissionOptions mission{};
};

struct TerminalReport {
  Eigen::Vector2d initial_residual = Eigen::Vector2d::Zero();
  Eigen::Vector2d final_residual = Eigen::Vector2d::Zero();
  double initial_cost1 = 0.0;
  int probes = 0;       // mission re-solves
  int rounds = 0;
  bool converged = false;
  bool cost_monotone = true;  // every accepted phase move kept cost1 from increasing
  std::vector<std::string> notes;  // e.g. no sign change within one period
};

// Moves the arrival phase on orbit2 until rf changes sign, refines by
// bisection, then does the same with the departure phase on orbit1 and r0.
// The sweep follows the direction of decreasing cost1.
MissionSolution optimize_terminal_points(const SystemParams& p, const MissionSolution& solution,
                                         const PeriodicOrbit& orbit1, const PeriodicOrbit& orbit2,
                                         const TerminalOptions& opt = {}, TerminalReport* report = nullptr);

struct MissionSample {
  double t = 0.0;
  int leg = 0;
  Eigen::VectorXd extremal;  // [x, m, p, p_m]
  Eigen::VectorXd control;
  double hamiltonian = 0.0;
};

// Dense samples of the whole mission, samples_per_leg + 1 per leg.
std::vector<MissionSample> mission_samples(const SystemParams& p, const MissionSolution& solution,
                                           int samples_per_leg = 200, const ExtremalOptions& opt = {});

struct TurnpikeCheck {
  double max_control = 0.0;
  double middle_max_control = 0.0;  // over the middle 60% of the horizon
  double ratio = 0.0;
  bool passed = false;  // ratio <= 0.01
};

TurnpikeCheck turnpike_check(const std::vector<MissionSample>& samples, double total_time);

}  // namespace lowthrust
