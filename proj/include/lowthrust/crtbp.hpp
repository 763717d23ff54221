#pragma once

// Circular restricted three-body model in the rotating, normalized frame.
// Primary 1 sits at (-mu, 0, 0) and primary 2 at (1 - mu, 0, 0).

#include <Eigen/Core>
#include <array>
#include <cmath>

#include "lowthrust/errors.hpp"
#include "lowthrust/ode.hpp"

namespace lowthrust {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kMinPrimaryDistance = 1e-6;

struct SystemParams {
  double mu = 1.215e-2;       // mass ratio
  double l_star = 3.84402e8;  // m
  double v_star = 1025.0;     // m/s
  double t_star = 2.361e6;    // s, sidereal period of the primaries
  double isp = 2000.0;        // s
  double g0 = 9.8;            // m/s^2
  double m0 = 1500.0;         // kg
  double tmax = 60.0;         // N
  double mass_primary1 = 5.972e24;  // kg
  double mass_primary2 = 7.349e22;  // kg

  static SystemParams earth_moon() { return SystemParams{}; }

  // Throws PreconditionError if the constants are inconsistent.
  void validate() const;

  // Seconds per normalized time unit.
  double time_unit() const { return t_star / (2.0 * kPi); }
  // Velocity unit implied by l* and t*.
  double velocity_unit() const { return l_star / time_unit(); }

  // Normalized thrust coefficient for a thrust in newtons: accelerations are
  // epsilon / m with m in kg.
  double epsilon_for(double thrust_newtons) const {
    return thrust_newtons * t_star * t_star / (4.0 * kPi * kPi * l_star);
  }
  double epsilon() const { return epsilon_for(tmax); }

  // Mass flow coefficient: dm/dtau = -beta_star * epsilon * |u| in kg per
  // normalized time, equal to -(t*/2pi) Tmax |u| / (Isp g0).
  double beta_star() const { return velocity_unit() / (isp * g0); }
};

enum class Dimension { planar = 2, spatial = 3 };

inline int position_dim(Dimension d) { return static_cast<int>(d); }
inline int state_dim(Dimension d) { return 2 * static_cast<int>(d); }
Dimension dimension_of_state(Eigen::Index size);

// Acceleration in the rotating frame for a position/velocity of dimension d
// (2 or 3). Writes a[0..d).
inline void crtbp_acceleration(double mu, int d, const double* r, const double* v, double* a) {
  const double x1 = r[0] + mu, x2 = r[0] - 1.0 + mu;
  const double y = r[1], z = (d == 3) ? r[2] : 0.0;
  const double r1s = x1 * x1 + y * y + z * z, r2s = x2 * x2 + y * y + z * z;
  if (r1s < kMinPrimaryDistance * kMinPrimaryDistance || r2s < kMinPrimaryDistance * kMinPrimaryDistance)
    throw SingularityError("state too close to a primary");
  const double r1 = std::sqrt(r1s), r2 = std::sqrt(r2s);
  const double k1 = (1.0 - mu) / (r1s * r1), k2 = mu / (r2s * r2);
  a[0] = r[0] + 2.0 * v[1] - k1 * x1 - k2 * x2;
  a[1] = y - 2.0 * v[0] - (k1 + k2) * y;
  if (d == 3) a[2] = -(k1 + k2) * z;
}

// Symmetric matrix G = d(acceleration)/d(position), written row-major into
// g[d*d].
inline void crtbp_position_jacobian(double mu, int d, const double* r, double* g) {
  const double x1 = r[0] + mu, x2 = r[0] - 1.0 + mu;
  const double y = r[1], z = (d == 3) ? r[2] : 0.0;
  const double r1s = x1 * x1 + y * y + z * z, r2s = x2 * x2 + y * y + z * z;
  const double r1 = std::sqrt(r1s), r2 = std::sqrt(r2s);
  const double a1 = (1.0 - mu) / (r1s * r1), a2 = mu / (r2s * r2);
  const double b1 = 3.0 * a1 / r1s, b2 = 3.0 * a2 / r2s;
  const double p[3][2] = {{x1, x2}, {y, y}, {z, z}};
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double v = b1 * p[i][0] * p[j][0] + b2 * p[i][1] * p[j][1];
      if (i == j) v += -a1 - a2 + (i < 2 ? 1.0 : 0.0);
      g[i * d + j] = v;
    }
  }
}

// Uncontrolled vector field for a state of size 4 or 6.
template <int N>
Vec<N> crtbp_field(double mu, const Vec<N>& s) {
  const int d = static_cast<int>(s.size()) / 2;
  Vec<N> out(s.size());
  double a[3];
  crtbp_acceleration(mu, d, s.data(), s.data() + d, a);
  for (int i = 0; i < d; ++i) {
    out[i] = s[d + i];
    out[d + i] = a[i];
  }
  return out;
}

// Jacobian of the uncontrolled field (2d x 2d).
Eigen::MatrixXd crtbp_jacobian(double mu, const Eigen::VectorXd& s);

Eigen::VectorXd vector_field(const SystemParams& p, const Eigen::VectorXd& s);

// Effective potential including the constant -mu(1-mu)/2.
double effective_potential(double mu, const Eigen::VectorXd& position);
double energy(const SystemParams& p, const Eigen::VectorXd& s);
double energy(double mu, const Eigen::VectorXd& s);

// L1..L5 as planar states with zero velocity (index 0 is L1).
std::array<Eigen::Vector4d, 5> lagrange_points(double mu);
// Collinear point x-coordinate (index 1, 2 or 3).
double collinear_point(double mu, int index);

// Lifts a planar state to a spatial one (z = vz = 0).
Eigen::VectorXd to_spatial(const Eigen::VectorXd& planar);

struct PhysicalState {
  Eigen::VectorXd position;  // m
  Eigen::VectorXd velocity;  // m/s
};

PhysicalState to_physical(const SystemParams& p, const Eigen::VectorXd& s);
Eigen::VectorXd to_normalized(const SystemParams& p, const PhysicalState& s);
double time_to_seconds(const SystemParams& p, double tau);
double time_to_days(const SystemParams& p, double tau);
double time_from_seconds(const SystemParams& p, double seconds);

// Field functor for the integrator.
template <int N>
struct CrtbpField {
  double mu;
  Vec<N> operator()(double, const Vec<N>& s) const { return crtbp_field<N>(mu, s); }
};

// Propagation helpers on dynamic vectors (dispatch on dimension).
Eigen::VectorXd crtbp_flow(double mu, const Eigen::VectorXd& s, double t0, double t1, const Tolerance& tol = {});

}  // namespace lowthrust
