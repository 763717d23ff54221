#pragma once

// Heteroclinic connections between two periodic orbits of equal energy,
// found on a Poincare section, and closest-approach bridging of manifold cuts.

#include <Eigen/Core>
#include <vector>

#include "lowthrust/manifolds.hpp"
#include "lowthrust/newton.hpp"

namespace lowthrust {

struct HeteroclinicOptions {
  double alpha = 1.0 / 384402.0;
  int n_grid = 100;
  Section section = Section::U2;
  int crossing_unstable = 1;  // k-th crossing of the departure manifold
  int crossing_stable = 1;    // k-th crossing of the arrival manifold
  Branch branch_unstable = Branch::plus;
  Branch branch_stable = Branch::minus;
  double horizon = 12.0;
  NewtonOptions newton{1e-11, 30, 30, 1e-7, false, 1};
  Tolerance tol{};
  unsigned threads = 0;
};

struct HeteroclinicOrbit {
  double departure_phase = 0.0;  // on orbit 1
  double arrival_phase = 0.0;    // on orbit 2
  double alpha = 0.0;
  // Alpha-offset seeds: first point near orbit 1 and last point near orbit 2.
  Eigen::VectorXd departure_seed;
  Eigen::VectorXd arrival_seed;
  double time_unstable = 0.0;  // seed to section along the unstable leg
  double time_stable = 0.0;    // section to seed along the stable leg
  double total_time = 0.0;
  // Section states of both legs; the velocity component normal to the
  // section is recovered from the orbit energy with the sign of the crossing.
  Eigen::VectorXd junction_unstable;
  Eigen::VectorXd junction_stable;
  double junction_mismatch = 0.0;  // infinity norm of the difference
  double grid_min_distance = 0.0;  // section distance of the best grid pair
  int grid_fiber_unstable = 0;
  int grid_fiber_stable = 0;
  // Forward-time path from departure_seed (t = 0) to arrival_seed (t = total_time).
  Trajectory<Eigen::Dynamic> trajectory;
  double windings = 0.0;  // signed revolutions about the smaller primary
  int revolutions = 0;    // complete turns, floor(|windings|)
  int iterations = 0;
};

// Solves for the pair of orbit phases whose manifold fibers meet on the
// section in (y, vy) (planar orbits). Throws PreconditionError for unequal
// energies or identical orbits, NoConnection if the section curves do not
// intersect and NonConvergence if the phase Newton fails.
HeteroclinicOrbit find_heteroclinic(const SystemParams& p, const PeriodicOrbit& orbit1, const PeriodicOrbit& orbit2,
                                    const HeteroclinicOptions& opt = {});

// Signed number of revolutions of the path about (1 - mu, 0).
double count_windings(const SystemParams& p, const Trajectory<Eigen::Dynamic>& traj);

struct BridgePair {
  Eigen::VectorXd point_1;
  Eigen::VectorXd point_2;
  double gap = 0.0;  // Euclidean norm of the full-state difference
  int fiber_1 = 0;
  int fiber_2 = 0;
  double t_1 = 0.0;
  double t_2 = 0.0;
};

// Exhaustive closest pair between two cuts; ties keep the lowest index pair.
// Throws NoCandidates if either cut is empty.
BridgePair closest_approach(const std::vector<CutPoint>& cut1, const std::vector<CutPoint>& cut2);
BridgePair closest_approach(const std::vector<ManifoldFiber>& fibers1, const std::vector<ManifoldFiber>& fibers2,
                            Section section, int k1 = 1, int k2 = 1);

}  // namespace lowthrust
