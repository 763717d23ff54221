#include "lowthrust/crtbp.hpp"

#include <boost/math/tools/roots.hpp>
#include <sstream>

namespace lowthrust {

void SystemParams::validate() const {
  if (!(mu > 0.0 && mu < 1.0)) throw PreconditionError("mass ratio must lie in (0, 1)");
  if (!(l_star > 0 && v_star > 0 && t_star > 0 && isp > 0 && g0 > 0 && m0 > 0 && tmax > 0))
    throw PreconditionError("system constants must be positive");
  const double implied = velocity_unit();
  if (std::abs(implied - v_star) > 0.005 * v_star) {
    std::ostringstream msg;
    msg << "v* = " << v_star << " m/s inconsistent with 2 pi l*/t* = " << implied << " m/s";
    throw PreconditionError(msg.str());
  }
}

Dimension dimension_of_state(Eigen::Index size) {
  if (size == 4) return Dimension::planar;
  if (size == 6) return Dimension::spatial;
  throw PreconditionError("state must have 4 (planar) or 6 (spatial) components");
}

Eigen::MatrixXd crtbp_jacobian(double mu, const Eigen::VectorXd& s) {
  const int d = position_dim(dimension_of_state(s.size()));
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  double g[9];
  crtbp_position_jacobian(mu, d, s.data(), g);
  for (int i = 0; i < d; ++i) {
    A(i, d + i) = 1.0;
    for (int j = 0; j < d; ++j) A(d + i, j) = g[i * d + j];
  }
  A(d, d + 1) = 2.0;
  A(d + 1, d) = -2.0;
  return A;
}

Eigen::VectorXd vector_field(const SystemParams& p, const Eigen::VectorXd& s) {
  dimension_of_state(s.size());
  if (!s.allFinite()) throw PreconditionError("state has non-finite components");
  return crtbp_field<Eigen::Dynamic>(p.mu, s);
}

double effective_potential(double mu, const Eigen::VectorXd& r) {
  const double x = r[0], y = r[1], z = r.size() > 2 ? r[2] : 0.0;
  const double r1 = std::sqrt((x + mu) * (x + mu) + y * y + z * z);
  const double r2 = std::sqrt((x - 1 + mu) * (x - 1 + mu) + y * y + z * z);
  if (r1 < kMinPrimaryDistance || r2 < kMinPrimaryDistance) throw SingularityError("state too close to a primary");
  return -0.5 * (x * x + y * y) - (1.0 - mu) / r1 - mu / r2 - 0.5 * mu * (1.0 - mu);
}

double energy(double mu, const Eigen::VectorXd& s) {
  const int d = position_dim(dimension_of_state(s.size()));
  return 0.5 * s.tail(d).squaredNorm() + effective_potential(mu, s.head(d));
}

double energy(const SystemParams& p, const Eigen::VectorXd& s) { return energy(p.mu, s); }

namespace {

double collinear_equation(double mu, double x) {
  const double d1 = x + mu, d2 = x - 1.0 + mu;
  return x - (1.0 - mu) * d1 / std::pow(std::abs(d1), 3) - mu * d2 / std::pow(std::abs(d2), 3);
}

}  // namespace

double collinear_point(double mu, int index) {
  if (!(mu > 0.0 && mu < 1.0)) throw PreconditionError("mass ratio must lie in (0, 1)");
  const double eps = 1e-9;
  double lo, hi;
  switch (index) {
    case 1: lo = -mu + eps; hi = 1.0 - mu - eps; break;
    case 2: lo = 1.0 - mu + eps; hi = 2.0; break;
    case 3: lo = -2.0; hi = -mu - eps; break;
    default: throw PreconditionError("collinear point index must be 1, 2 or 3");
  }
  auto f = [mu](double x) { return collinear_equation(mu, x); };
  boost::uintmax_t it = 300;
  auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(53), it);
  return std::abs(f(r.first)) <= std::abs(f(r.second)) ? r.first : r.second;
}

std::array<Eigen::Vector4d, 5> lagrange_points(double mu) {
  std::array<Eigen::Vector4d, 5> pts;
  pts[0] << collinear_point(mu, 1), 0, 0, 0;
  pts[1] << collinear_point(mu, 2), 0, 0, 0;
  pts[2] << collinear_point(mu, 3), 0, 0, 0;
  pts[3] << 0.5 - mu, std::sqrt(3.0) / 2.0, 0, 0;
  pts[4] << 0.5 - mu, -std::sqrt(3.0) / 2.0, 0, 0;
  return pts;
}

Eigen::VectorXd to_spatial(const Eigen::VectorXd& s) {
  if (s.size() == 6) return s;
  if (s.size() != 4) throw PreconditionError("state must have 4 or 6 components");
  Eigen::VectorXd out(6);
  out << s[0], s[1], 0.0, s[2], s[3], 0.0;
  return out;
}

PhysicalState to_physical(const SystemParams& p, const Eigen::VectorXd& s) {
  const int d = position_dim(dimension_of_state(s.size()));
  return {s.head(d) * p.l_star, s.tail(d) * p.v_star};
}

Eigen::VectorXd to_normalized(const SystemParams& p, const PhysicalState& s) {
  Eigen::VectorXd out(s.position.size() + s.velocity.size());
  out << s.position / p.l_star, s.velocity / p.v_star;
  return out;
}

double time_to_seconds(const SystemParams& p, double tau) { return tau * p.time_unit(); }
double time_to_days(const SystemParams& p, double tau) { return time_to_seconds(p, tau) / kSecondsPerDay; }
double time_from_seconds(const SystemParams& p, double seconds) { return seconds / p.time_unit(); }

Eigen::VectorXd crtbp_flow(double mu, const Eigen::VectorXd& s, double t0, double t1, const Tolerance& tol) {
  if (s.size() == 4) {
    CrtbpField<4> f{mu};
    Vec<4> y = flow<4>(f, Vec<4>(s), t0, t1, tol);
    return y;
  }
  if (s.size() == 6) {
    CrtbpField<6> f{mu};
    Vec<6> y = flow<6>(f, Vec<6>(s), t0, t1, tol);
    return y;
  }
  throw PreconditionError("state must have 4 or 6 components");
}

}  // namespace lowthrust
