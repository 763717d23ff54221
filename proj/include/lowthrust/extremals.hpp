#pragma once

// Pontryagin extremals of the minimum L2-norm low-thrust transfer in the
// controlled CRTBP with varying mass:
//
//   dx/dt = F0(x) + (eps / m) sum u_i F_i(x),   dm/dt = -beta* eps |u|,  |u| <= 1,
//
// with the normal Hamiltonian
//   H = -|u|^2 + <p, F0(x)> + (eps / m) <p_v, u> - p_m beta* eps |u|.
//
// Extremal states are stored as [x (n), m, p (n), p_m] with n = 4 or 6.

#include <Eigen/Core>
#include <vector>

#include "lowthrust/crtbp.hpp"
#include "lowthrust/newton.hpp"
#include "lowthrust/ode.hpp"
#include "lowthrust/orbits.hpp"

namespace lowthrust {

// Extremal state size for a state of size n.
inline constexpr int extremal_size(int n) { return 2 * n + 2; }
// State size n for an extremal state of the given size; throws PreconditionError.
int state_size_of_extremal(Eigen::Index size);

struct ExtremalView {
  int n;  // state size
  static ExtremalView of(const Eigen::VectorXd& e) { return {state_size_of_extremal(e.size())}; }
  int mass() const { return n; }
  int costate() const { return n + 1; }
  int mass_costate() const { return 2 * n + 1; }
};

Eigen::VectorXd make_extremal(const Eigen::VectorXd& x, double m, const Eigen::VectorXd& p, double pm);

struct ControlLaw {
  Eigen::VectorXd u;  // of dimension d (2 or 3)
  double psi = 0.0;
  bool singular = false;  // phi(p) = 0 with psi in (0, 1]; u set to zero
};

// Maximizer of H over the unit ball. With phi = p_v,
//   psi = ((eps / m) |phi| - beta* eps p_m) / 2
// and u = 0 (psi <= 0), psi phi / |phi| (0 <= psi <= 1), phi / |phi| (psi > 1).
ControlLaw control_law(const SystemParams& p, const Eigen::VectorXd& e, double eps);

// Hamiltonian at a given control and at the maximizing control.
double hamiltonian(const SystemParams& p, const Eigen::VectorXd& e, double eps, const Eigen::VectorXd& u);
double hamiltonian(const SystemParams& p, const Eigen::VectorXd& e, double eps);

namespace detail {

// Writes the control for costate p_v (d components) and returns |u|.
inline double control_kernel(int d, const double* pv, double m, double pm, double eps, double beta, double* u,
                             double* psi_out = nullptr, bool* singular = nullptr) {
  double nphi = 0.0;
  for (int i = 0; i < d; ++i) nphi += pv[i] * pv[i];
  nphi = std::sqrt(nphi);
  const double psi = 0.5 * ((eps / m) * nphi - beta * eps * pm);
  if (psi_out) *psi_out = psi;
  if (singular) *singular = false;
  double mag = 0.0;
  if (psi > 0.0) mag = psi > 1.0 ? 1.0 : psi;
  if (mag > 0.0 && nphi == 0.0) {
    if (singular) *singular = true;
    mag = 0.0;
  }
  for (int i = 0; i < d; ++i) u[i] = (mag > 0.0) ? mag * pv[i] / nphi : 0.0;
  return mag;
}

// Extremal field on raw arrays; y and out have 2n + 2 entries. Returns |u|.
inline double extremal_kernel(double mu, int n, double eps, double beta, const double* y, double* out) {
  const int d = n / 2;
  const double* r = y;
  const double* v = y + d;
  const double m = y[n];
  const double* pr = y + n + 1;
  const double* pv = y + n + 1 + d;
  const double pm = y[2 * n + 1];
  if (!(m > 0.0)) throw SingularityError("non-positive mass");
  double u[3], a[3], g[9];
  const double un = control_kernel(d, pv, m, pm, eps, beta, u);
  crtbp_acceleration(mu, d, r, v, a);
  crtbp_position_jacobian(mu, d, r, g);
  const double k = eps / m;
  double pu = 0.0;
  for (int i = 0; i < d; ++i) {
    out[i] = v[i];
    out[d + i] = a[i] + k * u[i];
    pu += pv[i] * u[i];
  }
  out[n] = -beta * eps * un;
  // p_r' = -G p_v,  p_v' = -p_r - Omega^T p_v with Omega the Coriolis block
  for (int i = 0; i < d; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += g[i * d + j] * pv[j];
    out[n + 1 + i] = -s;
  }
  out[n + 1 + d] = -pr[0] + 2.0 * pv[1];
  out[n + 2 + d] = -pr[1] - 2.0 * pv[0];
  if (d == 3) out[n + 3 + d] = -pr[2];
  out[2 * n + 1] = k / m * pu;
  return un;
}

}  // namespace detail

// Extremal field with the maximizing control. N = 10 (planar) or 14 (spatial),
// or Eigen::Dynamic.
template <int N>
struct ExtremalField {
  double mu;
  double eps;
  double beta;
  Vec<N> operator()(double, const Vec<N>& y) const {
    Vec<N> out(y.size());
    detail::extremal_kernel(mu, (static_cast<int>(y.size()) - 2) / 2, eps, beta, y.data(), out.data());
    return out;
  }
};

// Extremal field augmented with the running costs: the last three entries
// integrate |u|^2, (eps / m)^2 |u|^2 and |u|.
template <int N>
struct ExtremalCostField {
  double mu;
  double eps;
  double beta;
  Vec<N> operator()(double, const Vec<N>& y) const {
    Vec<N> out(y.size());
    const int ne = static_cast<int>(y.size()) - 3;
    const double un = detail::extremal_kernel(mu, (ne - 2) / 2, eps, beta, y.data(), out.data());
    const double m = y[(ne - 2) / 2];
    out[ne] = un * un;
    out[ne + 1] = (eps / m) * (eps / m) * un * un;
    out[ne + 2] = un;
    return out;
  }
};

// Right-hand side of the extremal system (dynamic size).
Eigen::VectorXd extremal_field(const SystemParams& p, const Eigen::VectorXd& e, double eps);

struct ExtremalOptions {
  Tolerance tol{1e-12, 1e-14};
};

// Extremal flow from t0 to t1; optionally records the accepted steps.
Eigen::VectorXd extremal_flow(const SystemParams& p, const Eigen::VectorXd& e0, double duration, double eps,
                              const ExtremalOptions& opt = {}, std::vector<double>* steps = nullptr);
// Same flow on a prescribed step sequence.
Eigen::VectorXd extremal_flow_steps(const SystemParams& p, const Eigen::VectorXd& e0, double duration, double eps,
                                    const std::vector<double>& steps);
// Dense extremal trajectory over [0, duration].
Trajectory<Eigen::Dynamic> extremal_trajectory(const SystemParams& p, const Eigen::VectorXd& e0, double duration,
                                               double eps, const ExtremalOptions& opt = {});

struct ArcCosts {
  double cost1 = 0.0;  // integral of |u|^2 (normalized time)
  double cost2 = 0.0;  // integral of (eps / m)^2 |u|^2 (normalized time)
  double cost3 = 0.0;  // integral of (Tmax / m)^2 |u|^2 dt in SI (N^2 kg^-2 s)
  double fuel = 0.0;   // kg
  double max_control = 0.0;
  double hamiltonian_drift = 0.0;  // max |H(t) - H(0)| on the sample grid
};

// Running costs of one extremal arc; thrust_newtons is the Tmax behind eps.
ArcCosts arc_costs(const SystemParams& p, const Eigen::VectorXd& e0, double duration, double eps,
                   double thrust_newtons, const ExtremalOptions& opt = {}, int samples = 400);

struct TransferProblem {
  Eigen::VectorXd start;  // state (4 or 6)
  double mass = 1500.0;   // kg
  Eigen::VectorXd target;
  double duration = 0.0;
  double epsilon = 0.0;

  void validate() const;
};

struct TransferSolution {
  Eigen::VectorXd costate0;  // (p(0), p_m(0))
  Eigen::VectorXd initial;   // full extremal state at t = 0
  Eigen::VectorXd final;     // extremal state at t = duration
  double duration = 0.0;
  double epsilon = 0.0;
  double residual_norm = 0.0;  // infinity norm of the shooting function
  int iterations = 0;
  int continuation_steps = 0;
  int refinements = 0;
  double condition_estimate = 0.0;
};

// Shooting function (x(t_f) - target, p_m(t_f)) of size n + 1.
Eigen::VectorXd shooting_residual(const SystemParams& p, const TransferProblem& prob, const Eigen::VectorXd& costate0,
                                  const ExtremalOptions& opt = {});

// Single shooting on (p(0), p_m(0)). Throws NonConvergence.
TransferSolution shoot_single(const SystemParams& p, const TransferProblem& prob, const Eigen::VectorXd& guess,
                              const NewtonOptions& newton = {1e-10, 30, 30, 1e-7, false, 1},
                              const ExtremalOptions& opt = {});

// Endpoints of a local transfer between an orbit and a manifold trajectory.
enum class AnchorSide {
  departure,  // orbit -> manifold: start = orbit point flowed back t_orbit, end = seed flowed forward t_manifold
  arrival,    // manifold -> orbit: start = seed flowed back t_manifold, end = orbit point flowed forward t_orbit
};

struct Anchors {
  Eigen::VectorXd start;
  Eigen::VectorXd end;
  double duration = 0.0;
  Eigen::VectorXd orbit_point;  // closest orbit point to the manifold seed
  double orbit_phase = 0.0;
  Eigen::VectorXd seed;
};

// The closest orbit point to the seed is found over an n_disc-point
// discretization of the orbit.
Anchors build_anchor_points(const SystemParams& p, const PeriodicOrbit& orbit, const Eigen::VectorXd& seed,
                            AnchorSide side, double t_orbit, double t_manifold, int n_disc = 1000,
                            const Tolerance& tol = {});

// Final-state continuation: the target moves linearly from the uncontrolled
// image of the start (solved by a zero costate) to anchors.end.
TransferSolution solve_local_transfer(const SystemParams& p, const Anchors& anchors, double mass, double eps,
                                      const ContinuationSchedule& schedule = ContinuationSchedule::uniform(20),
                                      const ExtremalOptions& opt = {});

// Scale of the costate components for a given mass and thrust: a unit change
// of the scaled costate moves psi by one.
Eigen::VectorXd costate_scale(const SystemParams& p, int n, double mass, double eps);

}  // namespace lowthrust
