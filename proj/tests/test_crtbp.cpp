#include <doctest.h>

#include <cmath>
#include <random>

#include "lowthrust/crtbp.hpp"

using namespace lowthrust;

namespace {

constexpr double kEarthRadius = 6371e3 / 3.84402e8;
constexpr double kMoonRadius = 1737.4e3 / 3.84402e8;

// Independent oracle: plain bisection on the collinear equilibrium equation.
double bisect_collinear(double mu, double lo, double hi) {
  auto f = [mu](double x) {
    const double d1 = x + mu, d2 = x - 1 + mu;
    return x - (1 - mu) * d1 / std::pow(std::abs(d1), 3) - mu * d2 / std::pow(std::abs(d2), 3);
  };
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi), fm = f(m);
    if ((fm < 0) == (flo < 0)) {
      lo = m;
      flo = fm;
    } else {
      hi = m;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("crtbp") {
  TEST_CASE("default constants and derived coefficients") {
    SystemParams p = SystemParams::earth_moon();
    CHECK_NOTHROW(p.validate());
    CHECK(p.velocity_unit() == doctest::Approx(2 * kPi * 3.84402e8 / 2.361e6));
    CHECK(std::abs(p.velocity_unit() - p.v_star) / p.v_star < 0.005);
    // epsilon = Tmax t*^2 / (4 pi^2 l*)
    CHECK(p.epsilon_for(1.0) == doctest::Approx(2.361e6 * 2.361e6 / (4 * kPi * kPi * 3.84402e8)));
    // beta* eps = (t*/2pi) Tmax / (Isp g0)
    const double tm = 0.3;
    CHECK(p.beta_star() * p.epsilon_for(tm) == doctest::Approx(p.time_unit() * tm / (p.isp * p.g0)).epsilon(1e-13));
    SystemParams bad = p;
    bad.v_star = 900;
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
    bad = p;
    bad.mu = 1.2;
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
  }

  TEST_CASE("Lagrange points") {
    const double mu = 1.215e-2;
    auto pts = lagrange_points(mu);
    SystemParams p;
    for (const auto& q : pts) CHECK(vector_field(p, Eigen::VectorXd(q)).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(pts[0][0] == doctest::Approx(bisect_collinear(mu, -mu + 1e-6, 1 - mu - 1e-6)).epsilon(1e-13));
    CHECK(pts[1][0] == doctest::Approx(bisect_collinear(mu, 1 - mu + 1e-6, 2.0)).epsilon(1e-13));
    CHECK(pts[2][0] == doctest::Approx(bisect_collinear(mu, -2.0, -mu - 1e-6)).epsilon(1e-13));
    CHECK(std::abs(pts[0][0] - 0.8369) < 1e-4);
    CHECK(pts[3][0] == doctest::Approx(0.5 - mu));
    CHECK(pts[3][1] == doctest::Approx(std::sqrt(3.0) / 2));
    CHECK(pts[4][1] == doctest::Approx(-std::sqrt(3.0) / 2));
    CHECK(energy(mu, Eigen::VectorXd(pts[0])) < energy(mu, Eigen::VectorXd(pts[1])));
  }

  TEST_CASE("vector field at L4 and at the second primary") {
    SystemParams p;
    Eigen::VectorXd l4(4);
    l4 << 0.5 - p.mu, std::sqrt(3.0) / 2, 0, 0;
    CHECK(vector_field(p, l4).lpNorm<Eigen::Infinity>() < 1e-14);
    Eigen::VectorXd moon(4);
    moon << 1 - p.mu, 0, 0, 0;
    CHECK_THROWS_AS(vector_field(p, moon), SingularityError);
    CHECK_THROWS_AS(energy(p, moon), SingularityError);
    Eigen::VectorXd bad(5);
    CHECK_THROWS_AS(vector_field(p, bad), PreconditionError);
  }

  TEST_CASE("spatial field reduces to the planar one in the plane") {
    SystemParams p;
    Eigen::VectorXd s(4);
    s << 0.9, 0.1, -0.05, 0.2;
    Eigen::VectorXd f4 = vector_field(p, s), f6 = vector_field(p, to_spatial(s));
    CHECK(f6[0] == f4[0]);
    CHECK(f6[1] == f4[1]);
    CHECK(f6[2] == 0.0);
    CHECK(f6[3] == f4[2]);
    CHECK(f6[4] == f4[3]);
    CHECK(f6[5] == 0.0);
  }

  TEST_CASE("analytic field Jacobian against finite differences") {
    SystemParams p;
    Eigen::VectorXd s(6);
    s << 0.95, 0.03, 0.02, 0.1, -0.2, 0.05;
    Eigen::MatrixXd A = crtbp_jacobian(p.mu, s);
    for (int j = 0; j < 6; ++j) {
      Eigen::VectorXd sp = s, sm = s;
      sp[j] += 1e-6;
      sm[j] -= 1e-6;
      Eigen::VectorXd col = (vector_field(p, sp) - vector_field(p, sm)) / 2e-6;
      CHECK((A.col(j) - col).lpNorm<Eigen::Infinity>() < 1e-7);
    }
  }

  TEST_CASE("energy conservation for random states above E(L2)") {
    const double mu = 1.215e-2;
    const double e2 = energy(mu, Eigen::VectorXd(lagrange_points(mu)[1]));
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> ux(0.8, 1.2), uy(-0.1, 0.1), uv(-0.3, 0.3);
    int tested = 0;
    double worst = 0.0;
    while (tested < 100) {
      Eigen::VectorXd s(4);
      s << ux(rng), uy(rng), uv(rng), uv(rng);
      const double r2 = std::hypot(s[0] - 1 + mu, s[1]);
      if (r2 < 0.03) continue;
      const double e0 = energy(mu, s);
      if (e0 <= e2) continue;
      // discard trajectories that hit the Earth or the Moon surface
      auto field = [mu](double, const Vec<4>& y) {
        if (std::hypot(y[0] + mu, y[1]) < kEarthRadius || std::hypot(y[0] - 1 + mu, y[1]) < kMoonRadius)
          throw SingularityError("impact");
        return crtbp_field<4>(mu, y);
      };
      Eigen::VectorXd s1;
      try {
        s1 = Eigen::VectorXd(flow<4>(field, Vec<4>(s), 0.0, 10.0));
      } catch (const Error&) {
        continue;
      }
      worst = std::max(worst, std::abs(energy(mu, s1) - e0));
      ++tested;
    }
    CHECK(worst <= 1e-10);
  }

  TEST_CASE("time-reversal symmetry of the planar flow") {
    const double mu = 1.215e-2;
    Eigen::VectorXd s(4);
    s << 0.83, 0.0, 0.01, 0.06;
    // (x(-t), -y(-t)) solves the system: mirror of the backward flow
    Eigen::VectorXd back = crtbp_flow(mu, s, 0.0, -2.0);
    Eigen::VectorXd mirrored(4);
    mirrored << s[0], -s[1], -s[2], s[3];
    Eigen::VectorXd fwd = crtbp_flow(mu, mirrored, 0.0, 2.0);
    Eigen::VectorXd expect(4);
    expect << back[0], -back[1], -back[2], back[3];
    CHECK((fwd - expect).lpNorm<Eigen::Infinity>() < 1e-10);
  }

  TEST_CASE("unit conversions") {
    SystemParams p;
    CHECK(time_to_days(p, 8.9613933501964) == doctest::Approx(38.974).epsilon(1e-4));
    CHECK(time_to_days(p, 10.96139) == doctest::Approx(47.67).epsilon(1e-3));
    Eigen::VectorXd s(6);
    s << 0.9, -0.1, 0.02, 0.3, 0.1, -0.01;
    Eigen::VectorXd back = to_normalized(p, to_physical(p, s));
    CHECK((back - s).lpNorm<Eigen::Infinity>() < 1e-15);
    CHECK(time_from_seconds(p, time_to_seconds(p, 3.7)) == doctest::Approx(3.7).epsilon(1e-15));
    CHECK(to_physical(p, s).position[0] == doctest::Approx(0.9 * 3.84402e8));
  }
}
