#pragma once

// Monodromy matrix, hyperbolic directions and globalization of the stable and
// unstable manifolds of a periodic orbit, with cuts on the x = 1 - mu plane.

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "lowthrust/crtbp.hpp"
#include "lowthrust/orbits.hpp"

namespace lowthrust {

enum class Stability { stable, unstable };

// Sign of the alpha offset along the eigendirection.
enum class Branch { plus = 1, minus = -1 };

inline double branch_sign(Branch b) { return b == Branch::plus ? 1.0 : -1.0; }

struct MonodromyMatrix {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd base_point;
  double phase = 0.0;  // time along the orbit of base_point
};

// State-transition matrix over one period from the orbit point at `phase`.
MonodromyMatrix monodromy(const SystemParams& p, const PeriodicOrbit& orbit, double phase = 0.0,
                          const Tolerance& tol = {});

struct ManifoldDirections {
  Eigen::VectorXd stable;    // unit eigenvector of 1 / lambda_u
  Eigen::VectorXd unstable;  // unit eigenvector of lambda_u
  double lambda_unstable = 0.0;
  double lambda_stable = 0.0;
  Eigen::VectorXcd eigenvalues;
};

// Eigenvectors of the dominant real eigenvalue and of its reciprocal, oriented
// with a positive x-component (positive y when x vanishes). Throws NotHyperbolic
// when no real eigenvalue exceeds 1 + 1e-9.
ManifoldDirections manifold_directions(const Eigen::MatrixXd& M);

// Poincare sections on the plane x = 1 - mu through the smaller primary:
// U2 keeps crossings with y < 0, U3 those with y > 0.
enum class Section { U2, U3 };

double section_x(const SystemParams& p);
bool on_section_side(Section s, const Eigen::VectorXd& state);

struct SectionCrossing {
  double t = 0.0;
  Eigen::VectorXd state;
};

struct FiberOptions {
  double horizon = 12.0;  // normalized time
  std::optional<Section> section;
  int stop_after = 1;  // propagation ends at this crossing of the armed section
  Tolerance tol{};
  bool keep_trajectory = true;
};

struct ManifoldFiber {
  double phase = 0.0;
  Eigen::VectorXd origin;     // orbit point at phase
  Eigen::VectorXd direction;  // unit eigendirection at phase
  Eigen::VectorXd seed;       // origin + branch * alpha * direction
  Stability stability = Stability::unstable;
  Branch branch = Branch::plus;
  double alpha = 0.0;
  // Samples with t starting at 0 and increasing (unstable) or decreasing (stable).
  Trajectory<Eigen::Dynamic> trajectory;
  std::optional<Section> section;          // armed section, if any
  std::vector<SectionCrossing> crossings;  // crossings of the armed section, in order
  bool failed = false;
  std::string failure;
};

// Eigendirection transported along the orbit: Y(phase) = Phi(phase, 0) Y(0),
// normalized after transport. Y(0) comes from the monodromy matrix at the
// orbit's initial state.
class ManifoldGenerator {
 public:
  ManifoldGenerator(const SystemParams& p, const PeriodicOrbit& orbit, Stability stability, const Tolerance& tol = {});

  const PeriodicOrbit& orbit() const { return orbit_; }
  Stability stability() const { return stability_; }
  double eigenvalue() const { return lambda_; }
  const Eigen::VectorXd& base_direction() const { return y0_; }

  // Orbit point and unit direction at a phase time (reduced modulo the period).
  std::pair<Eigen::VectorXd, Eigen::VectorXd> point_and_direction(double phase) const;
  Eigen::VectorXd seed(double phase, Branch branch, double alpha) const;

  // Propagates the fiber from the seed: forward for unstable, backward for stable.
  ManifoldFiber fiber(double phase, Branch branch, double alpha, const FiberOptions& opt = {}) const;

 private:
  SystemParams params_;
  PeriodicOrbit orbit_;
  Stability stability_;
  Tolerance tol_;
  Eigen::VectorXd y0_;
  double lambda_ = 0.0;
};

// Fibers at n_points equally spaced phases k T / n, in phase order. A fiber
// whose propagation fails is returned with failed = true. Fibers are
// propagated on up to `threads` workers (0 = hardware concurrency).
std::vector<ManifoldFiber> globalize(const SystemParams& p, const PeriodicOrbit& orbit, int n_points,
                                     Stability stability, Branch branch, double alpha, const FiberOptions& opt = {},
                                     unsigned threads = 0);

struct CutPoint {
  int fiber = 0;  // index into the fiber sequence
  double t = 0.0;
  Eigen::VectorXd state;
};

// k-th crossing of each fiber with the section; fibers without one are skipped.
std::vector<CutPoint> section_cut(const std::vector<ManifoldFiber>& fibers, Section section, int k = 1);

}  // namespace lowthrust
