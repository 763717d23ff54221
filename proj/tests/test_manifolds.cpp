#include <doctest.h>

#include <Eigen/LU>
#include <cmath>

#include "fixtures.hpp"
#include "lowthrust/manifolds.hpp"

using namespace lowthrust;
using lowthrust::testing::halo_with_z;
using lowthrust::testing::lyapunov_at;
using lowthrust::testing::params;

namespace {

constexpr double kAlpha = 1.0 / 384402.0;

void check_monodromy(const PeriodicOrbit& o, double phase) {
  const auto m = monodromy(params(), o, phase);
  const int n = static_cast<int>(m.matrix.rows());
  CHECK(std::abs(m.matrix.determinant() - 1.0) <= 1e-6);
  const auto d = manifold_directions(m.matrix);
  CHECK(d.lambda_unstable > 1.0);
  CHECK(std::abs(d.lambda_unstable * d.lambda_stable - 1.0) <= 1e-6);
  // the flow direction is invariant
  const Eigen::VectorXd f = vector_field(params(), m.base_point);
  CHECK((m.matrix * f - f).norm() <= 1e-6 * std::max(1.0, f.norm()));
  // a unit pair of multipliers
  int unit = 0;
  for (int i = 0; i < n; ++i)
    if (std::abs(d.eigenvalues[i] - 1.0) < 1e-4) ++unit;
  CHECK(unit >= 2);
  CHECK(std::abs(d.unstable.norm() - 1.0) <= 1e-14);
  CHECK(std::abs(d.stable.norm() - 1.0) <= 1e-14);
  CHECK(d.unstable[0] > 0);
  CHECK(d.stable[0] > 0);
  CHECK((m.matrix * d.unstable - d.lambda_unstable * d.unstable).norm() <= 1e-8 * d.lambda_unstable);
  CHECK((m.matrix * d.stable - d.lambda_stable * d.stable).norm() <= 1e-8 * d.lambda_unstable);
}

}  // namespace

TEST_SUITE("manifolds") {
  TEST_CASE("monodromy of planar Lyapunov orbits") {
    for (int c : {1, 2}) {
      const auto& o = lyapunov_at(c, -1.5890);
      check_monodromy(o, 0.0);
      check_monodromy(o, 0.37 * o.period);
    }
  }

  TEST_CASE("monodromy of Halo orbits") {
    for (int c : {1, 2}) check_monodromy(halo_with_z(c, 8000), 0.0);
  }

  TEST_CASE("L1 Lyapunov orbit just above the L2 level is hyperbolic") {
    const auto& o = lyapunov_at(1, -1.592);
    CHECK(manifold_directions(monodromy(params(), o).matrix).lambda_unstable > 1.0);
  }

  TEST_CASE("non-hyperbolic matrices are rejected") {
    Eigen::Matrix4d rot = Eigen::Matrix4d::Identity();
    rot.topLeftCorner<2, 2>() << std::cos(0.3), -std::sin(0.3), std::sin(0.3), std::cos(0.3);
    CHECK_THROWS_AS(manifold_directions(rot), NotHyperbolic);
    CHECK_THROWS_AS(manifold_directions(Eigen::Matrix4d::Identity()), NotHyperbolic);
  }

  TEST_CASE("sign convention falls back to y") {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m(1, 1) = 4.0;
    m(2, 2) = 0.25;
    const auto d = manifold_directions(m);
    CHECK(d.unstable[1] == doctest::Approx(1.0));
    CHECK(d.stable[2] == doctest::Approx(1.0));
  }

  TEST_CASE("transported direction is periodic and stays an eigendirection") {
    const auto& o = lyapunov_at(1, -1.5890);
    const ManifoldGenerator gen(params(), o, Stability::unstable);
    const auto [x, d] = gen.point_and_direction(0.999999999 * o.period);
    CHECK((d - gen.base_direction()).norm() <= 1e-6);
    const double t = 0.4 * o.period;
    const auto [xt, dt] = gen.point_and_direction(t);
    const auto dirs = manifold_directions(monodromy(params(), o, t).matrix);
    CHECK(std::min((dt - dirs.unstable).norm(), (dt + dirs.unstable).norm()) <= 1e-6);
  }

  TEST_CASE("fiber seeds and energy") {
    const auto& o = lyapunov_at(1, -1.5890);
    FiberOptions opt;
    opt.horizon = 1.0;
    for (auto st : {Stability::unstable, Stability::stable}) {
      const ManifoldGenerator gen(params(), o, st);
      for (double ph : {0.0, 0.21, 1.7}) {
        auto fp = gen.fiber(ph, Branch::plus, kAlpha, opt);
        auto fm = gen.fiber(ph, Branch::minus, kAlpha, opt);
        CHECK_FALSE(fp.failed);
        CHECK((fp.seed - fp.origin).isApprox(-(fm.seed - fm.origin), 0.0));
        CHECK((fp.seed - fp.origin - kAlpha * fp.direction).norm() <= 1e-15);
        CHECK(fp.trajectory.front() == fp.seed);
        CHECK(std::abs(energy(params(), fp.seed) - o.energy) <= 10 * kAlpha);
        CHECK(std::abs(energy(params(), fp.trajectory.back()) - energy(params(), fp.seed)) <= 1e-10);
        if (st == Stability::stable)
          CHECK(fp.trajectory.t_end() == doctest::Approx(-1.0));
        else
          CHECK(fp.trajectory.t_end() == doctest::Approx(1.0));
      }
    }
  }

  TEST_CASE("unstable fiber propagated backward re-approaches the orbit") {
    const auto& o = lyapunov_at(1, -1.5890);
    const ManifoldGenerator gen(params(), o, Stability::unstable);
    const double phase = 0.3;
    const Eigen::VectorXd seed = gen.seed(phase, Branch::plus, kAlpha);
    // distance to the orbit point with the same phase
    auto gap = [&](double tau) {
      return (crtbp_flow(params().mu, seed, 0.0, -tau) - orbit_state_at(params(), o, phase - tau)).norm();
    };
    const double d0 = gap(0.0), d1 = gap(0.5 * o.period), d2 = gap(o.period);
    CHECK(d0 == doctest::Approx(kAlpha).epsilon(1e-9));
    CHECK(d1 < d0);
    CHECK(d2 < d1);
    // one period backward contracts the offset by the unstable multiplier
    CHECK(d2 * gen.eigenvalue() == doctest::Approx(d0).epsilon(0.05));
  }

  TEST_CASE("section cuts lie on the plane through the Moon") {
    const auto& o = lyapunov_at(1, -1.5890);
    FiberOptions opt;
    opt.section = Section::U2;
    opt.stop_after = 2;
    opt.horizon = 15.0;
    const auto fibers = globalize(params(), o, 40, Stability::unstable, Branch::plus, kAlpha, opt);
    REQUIRE(fibers.size() == 40);
    for (std::size_t i = 0; i < fibers.size(); ++i) CHECK(fibers[i].phase == doctest::Approx(o.period * i / 40.0));
    for (int k : {1, 2}) {
      const auto cut = section_cut(fibers, Section::U2, k);
      CHECK(cut.size() >= 20);
      for (const auto& c : cut) {
        CHECK(std::abs(c.state[0] - (1 - params().mu)) <= 1e-12);
        CHECK(c.state[1] < 0);
        CHECK(c.t > 0);
      }
    }
    // every second crossing comes after the first one of the same fiber
    const auto c1 = section_cut(fibers, Section::U2, 1);
    const auto c2 = section_cut(fibers, Section::U2, 2);
    for (const auto& b : c2) {
      for (const auto& a : c1)
        if (a.fiber == b.fiber) CHECK(a.t < b.t);
    }
    CHECK_THROWS_AS(section_cut(fibers, Section::U3), PreconditionError);
  }

  TEST_CASE("stable fibers reach the section backward in time") {
    const auto& o = lyapunov_at(2, -1.5890);
    FiberOptions opt;
    opt.section = Section::U2;
    const auto fibers = globalize(params(), o, 20, Stability::stable, Branch::minus, kAlpha, opt);
    const auto cut = section_cut(fibers, Section::U2);
    CHECK(cut.size() >= 10);
    for (const auto& c : cut) {
      CHECK(c.t < 0);
      CHECK(std::abs(c.state[0] - (1 - params().mu)) <= 1e-12);
    }
  }

  TEST_CASE("globalization is deterministic across thread counts") {
    const auto& o = lyapunov_at(1, -1.5890);
    FiberOptions opt;
    opt.section = Section::U2;
    opt.keep_trajectory = false;
    const auto a = globalize(params(), o, 12, Stability::unstable, Branch::plus, kAlpha, opt, 1);
    const auto b = globalize(params(), o, 12, Stability::unstable, Branch::plus, kAlpha, opt, 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].seed == b[i].seed);
      CHECK(a[i].crossings.size() == b[i].crossings.size());
      if (!a[i].crossings.empty()) CHECK(a[i].crossings[0].state == b[i].crossings[0].state);
    }
  }

  TEST_CASE("invalid requests") {
    const auto& o = lyapunov_at(1, -1.5890);
    CHECK_THROWS_AS(globalize(params(), o, 0, Stability::unstable, Branch::plus, kAlpha), PreconditionError);
    CHECK_THROWS_AS(globalize(params(), o, 4, Stability::unstable, Branch::plus, 0.0), PreconditionError);
  }
}
