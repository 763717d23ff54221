#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "lowthrust/connections.hpp"

using namespace lowthrust;
using lowthrust::testing::halo_with_z;
using lowthrust::testing::lyapunov_at;
using lowthrust::testing::params;
using lowthrust::testing::two_revolution_connection;

namespace {

CutPoint cut_point(int fiber, Eigen::VectorXd s) { return CutPoint{fiber, 0.0, std::move(s)}; }

}  // namespace

TEST_SUITE("connections") {
  TEST_CASE("heteroclinic with two revolutions about the Moon") {
    const auto& h = two_revolution_connection();
    CHECK(h.junction_mismatch <= 1e-9);
    CHECK(h.junction_mismatch <= h.grid_min_distance);
    CHECK(h.revolutions == 2);
    CHECK(h.total_time == doctest::Approx(h.time_unstable + h.time_stable).epsilon(1e-15));
    CHECK(h.time_unstable > 0);
    CHECK(h.time_stable > 0);
    CHECK(h.trajectory.t_start() == 0.0);
    CHECK(h.trajectory.t_end() == doctest::Approx(h.total_time).epsilon(1e-14));
    CHECK((h.trajectory.front() - h.departure_seed).norm() == 0.0);
    CHECK((h.trajectory.back() - h.arrival_seed).norm() <= 1e-12);
    // both junction states lie on the section
    CHECK(std::abs(h.junction_unstable[0] - (1 - params().mu)) <= 1e-12);
    CHECK(h.junction_unstable[1] < 0);
    // the seeds are the alpha-offset points near each orbit
    const ManifoldGenerator gu(params(), lyapunov_at(1, -1.5890), Stability::unstable);
    CHECK((h.departure_seed - gu.seed(h.departure_phase, Branch::plus, h.alpha)).norm() <= 1e-14);
  }

  TEST_CASE("energy is constant along the whole heteroclinic") {
    const auto& h = two_revolution_connection();
    const double e0 = energy(params(), h.trajectory.front());
    double worst = 0.0;
    for (int i = 0; i <= 2000; ++i) {
      const double t = h.total_time * i / 2000.0;
      worst = std::max(worst, std::abs(energy(params(), h.trajectory(t)) - e0));
    }
    CHECK(worst <= 1e-8);
    // the path is continuous across the junction
    const double tj = h.time_unstable;
    CHECK((h.trajectory(tj - 1e-9) - h.trajectory(tj + 1e-9)).norm() <= 1e-7);
  }

  TEST_CASE("first crossings of both manifolds do not meet at this energy") {
    CHECK_THROWS_AS(find_heteroclinic(params(), lyapunov_at(1, -1.5890), lyapunov_at(2, -1.5890)), NoConnection);
  }

  TEST_CASE("single-crossing connection at a higher energy") {
    HeteroclinicOptions opt;
    opt.n_grid = 150;
    const auto h = find_heteroclinic(params(), lyapunov_at(1, -1.582), lyapunov_at(2, -1.582), opt);
    CHECK(h.junction_mismatch <= 1e-9);
    CHECK(h.revolutions == 0);
    CHECK(h.total_time > 9.0);
    CHECK(h.total_time < 10.5);
  }

  TEST_CASE("preconditions") {
    const auto& a = lyapunov_at(1, -1.5890);
    CHECK_THROWS_AS(find_heteroclinic(params(), a, lyapunov_at(2, -1.5885)), PreconditionError);
    CHECK_THROWS_AS(find_heteroclinic(params(), a, a), PreconditionError);
    CHECK_THROWS_AS(find_heteroclinic(params(), halo_with_z(1, 8000), halo_with_z(2, 8000)), PreconditionError);
  }

  TEST_CASE("winding count of a circle about the Moon") {
    Trajectory<Eigen::Dynamic> tr;
    const double cx = 1 - params().mu;
    for (int i = 0; i <= 300; ++i) {
      const double a = -2 * kPi * 3 * i / 300.0;
      tr.t.push_back(i);
      tr.y.push_back(Eigen::Vector4d(cx + 0.05 * std::cos(a), 0.05 * std::sin(a), 0, 0));
    }
    CHECK(count_windings(params(), tr) == doctest::Approx(-3.0));
  }

  TEST_CASE("closest approach") {
    std::vector<CutPoint> a{cut_point(0, Eigen::Vector2d(0, 0)), cut_point(3, Eigen::Vector2d(1, 0)),
                            cut_point(5, Eigen::Vector2d(2, 0))};
    std::vector<CutPoint> b{cut_point(1, Eigen::Vector2d(1.5, 0)), cut_point(2, Eigen::Vector2d(0.5, 1))};
    const auto ab = closest_approach(a, b);
    const auto ba = closest_approach(b, a);
    CHECK(ab.gap == doctest::Approx(0.5));
    CHECK(ab.gap == ba.gap);
    // the tie between (1, 0) and (2, 0) keeps the lower index
    CHECK(ab.fiber_1 == 3);
    CHECK(ab.fiber_2 == 1);
    const auto aa = closest_approach(a, a);
    CHECK(aa.gap == 0.0);
    CHECK(aa.fiber_1 == 0);
    CHECK(aa.fiber_2 == 0);
    CHECK_THROWS_AS(closest_approach(a, std::vector<CutPoint>{}), NoCandidates);
  }

  TEST_CASE("Halo manifold cuts can be bridged") {
    FiberOptions fo;
    fo.section = Section::U2;
    fo.keep_trajectory = false;
    const auto fu = globalize(params(), halo_with_z(1, 8000), 60, Stability::unstable, Branch::plus, 1 / 384402.0, fo);
    const auto fs = globalize(params(), halo_with_z(2, 8000), 60, Stability::stable, Branch::minus, 1 / 384402.0, fo);
    const auto b = closest_approach(fu, fs, Section::U2);
    const auto r = closest_approach(fs, fu, Section::U2);
    CHECK(b.gap == r.gap);
    CHECK(std::abs(b.point_1[0] - (1 - params().mu)) <= 1e-12);
    CHECK(std::abs(b.point_2[0] - (1 - params().mu)) <= 1e-12);
    CHECK(b.point_1.size() == 6);
    CHECK(b.gap == doctest::Approx((b.point_1 - b.point_2).norm()));
  }
}
