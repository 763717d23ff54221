#include <doctest.h>

#include <cmath>

#include "lowthrust/orbits.hpp"

using namespace lowthrust;

namespace {

const SystemParams kParams = SystemParams::earth_moon();

PeriodicOrbit small_lyapunov(int center, double amplitude = 0.005) {
  return correct_orbit(kParams, richardson_guess(kParams, center, amplitude, Dimension::planar));
}

}  // namespace

TEST_SUITE("orbits") {
  TEST_CASE("planar guess collapses onto the libration point") {
    for (int c : {1, 2, 3}) {
      auto g = richardson_guess(kParams, c, 1e-12, Dimension::planar);
      Eigen::Vector4d l = lagrange_points(kParams.mu)[c - 1];
      CHECK((g.state - Eigen::VectorXd(l)).norm() < 1e-10);
      CHECK(g.valid);
    }
    CHECK_FALSE(richardson_guess(kParams, 1, -0.01, Dimension::planar).valid);
  }

  TEST_CASE("small Lyapunov orbits from the linear guess") {
    for (int c : {1, 2}) {
      auto g = richardson_guess(kParams, c, 0.005, Dimension::planar);
      auto o = correct_orbit(kParams, g);
      CHECK(o.iterations <= 10);
      CHECK(closure_error(kParams, o) <= 1e-9);
      CHECK(half_period_residual(kParams, o).lpNorm<Eigen::Infinity>() <= 1e-10);
      CHECK(o.initial_state[0] == g.state[0]);
      const double eg = energy(kParams.mu, g.state);
      CHECK(std::abs(o.energy - eg) / std::abs(eg) < 0.01);
      CHECK(o.period == doctest::Approx(g.period).epsilon(0.05));
    }
  }

  TEST_CASE("Halo orbits from the third-order guess") {
    for (int c : {1, 2}) {
      for (double az : {8000e3, -8000e3}) {
        auto g = richardson_guess(kParams, c, az / kParams.l_star, Dimension::spatial);
        CHECK(g.valid);
        auto o = correct_orbit(kParams, g, FixedCoordinate::z0);
        CHECK(o.iterations <= 10);
        CHECK(closure_error(kParams, o) <= 1e-9);
        CHECK(half_period_residual(kParams, o).lpNorm<Eigen::Infinity>() <= 1e-10);
        CHECK(o.initial_state[2] == g.state[2]);
        // the expansion is accurate to a few percent at this size
        CHECK(std::abs(o.initial_state[0] - g.state[0]) < 2e-3);
        CHECK(o.period == doctest::Approx(g.period).epsilon(0.02));
        CHECK(std::signbit(o.initial_state[2]) == std::signbit(az));
      }
    }
  }

  TEST_CASE("Halo guess outside the expansion range is flagged") {
    CHECK(richardson_guess(kParams, 1, 100e3 / kParams.l_star, Dimension::spatial).valid);
    auto g = richardson_guess(kParams, 1, 60000e3 / kParams.l_star, Dimension::spatial);
    CHECK_FALSE(g.valid);
    CHECK_FALSE(g.note.empty());
    CHECK_THROWS_AS(richardson_guess(kParams, 3, 0.01, Dimension::spatial), PreconditionError);
  }

  TEST_CASE("correction requires a symmetric state") {
    auto g = richardson_guess(kParams, 1, 0.005, Dimension::planar);
    g.state[1] = 1e-3;
    CHECK_THROWS_AS(correct_orbit(kParams, g), PreconditionError);
  }

  TEST_CASE("period is unchanged by re-correction from the opposite crossing") {
    auto o = small_lyapunov(1, 0.01);
    Eigen::VectorXd half = orbit_state_at(kParams, o, 0.5 * o.period);
    OrbitGuess g;
    g.state = half;
    g.state[1] = 0.0;
    g.state[2] = 0.0;
    g.period = o.period;
    g.center = 1;
    auto o2 = correct_orbit(kParams, g);
    CHECK(std::abs(o2.period - o.period) <= 1e-9);
    CHECK(std::abs(o2.energy - o.energy) <= 1e-10);
  }

  TEST_CASE("x0 continuation of the L1 Lyapunov family") {
    auto o = small_lyapunov(1);
    CHECK(continue_family_x0(kParams, o, o.initial_state[0]).period == o.period);
    FamilyReport rep;
    auto big = continue_family_x0(kParams, o, o.initial_state[0] - 0.03, ContinuationSchedule::uniform(15), &rep);
    CHECK(big.initial_state[0] == doctest::Approx(o.initial_state[0] - 0.03).epsilon(1e-14));
    CHECK(rep.members.size() >= 16);
    for (const auto& m : rep.members) CHECK(closure_error(kParams, m) <= 1e-9);
    CHECK(rep.energy_monotone);
    CHECK(big.energy > o.energy);
  }

  TEST_CASE("energy continuation of Lyapunov orbits") {
    const double target = -1.5890;
    for (int c : {1, 2}) {
      auto o = small_lyapunov(c);
      CHECK(continue_family_energy(kParams, o, o.energy).period == o.period);
      FamilyReport rep;
      auto t = continue_family_energy(kParams, o, target, ContinuationSchedule::uniform(50), &rep);
      CHECK(std::abs(t.energy - target) <= 1e-10);
      CHECK(closure_error(kParams, t) <= 1e-9);
      CHECK(half_period_residual(kParams, t).lpNorm<Eigen::Infinity>() <= 1e-10);
      CHECK(rep.energy_monotone);
      for (std::size_t i = 0; i < rep.members.size(); i += 10) CHECK(closure_error(kParams, rep.members[i]) <= 1e-9);
    }
  }

  TEST_CASE("energy targets below the libration point level are rejected") {
    auto o = small_lyapunov(2);
    const double e2 = energy(kParams.mu, Eigen::VectorXd(lagrange_points(kParams.mu)[1]));
    CHECK_THROWS_AS(continue_family_energy(kParams, o, e2 - 1e-6), PreconditionError);
    // -1.592081 sits just below the L2 level for mu = 0.01215
    CHECK(-1.592081 < e2);
    CHECK_THROWS_AS(continue_family_energy(kParams, o, -1.592081), PreconditionError);
  }

  TEST_CASE("Halo energy continuation") {
    auto g = richardson_guess(kParams, 2, 16000e3 / kParams.l_star, Dimension::spatial);
    auto o = correct_orbit(kParams, g, FixedCoordinate::z0);
    FamilyReport rep;
    auto t = continue_family_energy(kParams, o, -1.5805, ContinuationSchedule::uniform(20), &rep);
    CHECK(std::abs(t.energy + 1.5805) <= 1e-10);
    CHECK(closure_error(kParams, t) <= 1e-9);
    CHECK(rep.energy_monotone);
  }

  TEST_CASE("Halo family by x0 stays on the Halo branch") {
    auto g = richardson_guess(kParams, 1, 10000e3 / kParams.l_star, Dimension::spatial);
    auto o = correct_orbit(kParams, g, FixedCoordinate::z0);
    const double xl = collinear_point(kParams.mu, 1);
    FamilyReport rep;
    auto t = continue_family_x0(kParams, o, xl, ContinuationSchedule::uniform(20), &rep);
    CHECK(closure_error(kParams, t) <= 1e-9);
    // the planar Lyapunov orbit through the same x0 is never accepted
    double z_prev = 0.0;
    for (const auto& m : rep.members) {
      CHECK(m.initial_state[2] > z_prev);
      z_prev = m.initial_state[2];
    }
  }
}
