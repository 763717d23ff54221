#pragma once

// Symmetric periodic orbits about the collinear points: planar Lyapunov and
// spatial Halo orbits, their differential correction and continuation.

#include <Eigen/Core>
#include <string>
#include <vector>

#include "lowthrust/crtbp.hpp"
#include "lowthrust/newton.hpp"

namespace lowthrust {

// Initial state on the symmetry plane (y = 0, vx = 0 and, spatially, vz = 0).
struct PeriodicOrbit {
  Eigen::VectorXd initial_state;
  double period = 0.0;
  double energy = 0.0;
  int center = 1;  // collinear point index 1..3
  int iterations = 0;  // Newton iterations of the last correction

  Dimension dimension() const { return dimension_of_state(initial_state.size()); }
};

struct OrbitGuess {
  Eigen::VectorXd state;
  double period = 0.0;
  int center = 1;
  bool valid = true;
  std::string note;
};

// Analytic approximation about a collinear point.
//  planar: first-order in-plane oscillation, amplitude = x-excursion from the
//          libration point (normalized length); the guess starts at x_L - amplitude.
//  spatial: third-order Halo expansion, amplitude = z-excursion (normalized
//          length), its sign selecting the northern (+) or southern (-) family.
OrbitGuess richardson_guess(const SystemParams& p, int center, double amplitude, Dimension dim);

enum class FixedCoordinate { x0, z0 };

struct OrbitSolveOptions {
  NewtonOptions newton{1e-11, 40, 30, 1e-8, false, 2};
  Tolerance tol{};
};

// Differential correction by single shooting on the half-period symmetry
// conditions, holding the chosen coordinate fixed.
PeriodicOrbit correct_orbit(const SystemParams& p, const OrbitGuess& guess, FixedCoordinate fixed = FixedCoordinate::x0,
                            const OrbitSolveOptions& opt = {});

// Half-period symmetry residual (y, vx[, vz]) at T/2.
Eigen::VectorXd half_period_residual(const SystemParams& p, const PeriodicOrbit& orbit, const Tolerance& tol = {});
// Norm of phi(T, x0) - x0.
double closure_error(const SystemParams& p, const PeriodicOrbit& orbit, const Tolerance& tol = {});

struct FamilyReport {
  std::vector<PeriodicOrbit> members;
  bool energy_monotone = true;
  int continuation_steps = 0;
  int refinements = 0;
};

PeriodicOrbit continue_family_x0(const SystemParams& p, const PeriodicOrbit& orbit0, double x0_target,
                                 const ContinuationSchedule& schedule = ContinuationSchedule::uniform(50),
                                 FamilyReport* report = nullptr, const OrbitSolveOptions& opt = {});

PeriodicOrbit continue_family_energy(const SystemParams& p, const PeriodicOrbit& orbit0, double energy_target,
                                     const ContinuationSchedule& schedule = ContinuationSchedule::uniform(50),
                                     FamilyReport* report = nullptr, const OrbitSolveOptions& opt = {});

// n states at equally spaced phases t_k = k T / n, k = 0..n-1.
std::vector<Eigen::VectorXd> sample_orbit(const SystemParams& p, const PeriodicOrbit& orbit, int n,
                                          const Tolerance& tol = {});

// State reached after a phase time t along the orbit (t reduced modulo the period).
Eigen::VectorXd orbit_state_at(const SystemParams& p, const PeriodicOrbit& orbit, double t, const Tolerance& tol = {});

}  // namespace lowthrust
