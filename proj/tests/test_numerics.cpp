#include <doctest.h>

#include <cmath>

#include "lowthrust/crtbp.hpp"
#include "lowthrust/newton.hpp"
#include "lowthrust/ode.hpp"

using namespace lowthrust;

namespace {

struct Oscillator {
  Vec<2> operator()(double, const Vec<2>& y) const { return Vec<2>(y[1], -y[0]); }
};

}  // namespace

TEST_SUITE("numerics") {
  TEST_CASE("propagation at an equilibrium stays constant") {
    const double mu = 1.215e-2;
    Vec<4> l1 = lagrange_points(mu)[0];
    CrtbpField<4> f{mu};
    // L1 is unstable, so roundoff grows like exp(2.9 t); keep the span short
    auto tr = propagate<4>(f, l1, 0.0, 1.0);
    CHECK(tr.t_end() == doctest::Approx(1.0));
    CHECK((tr.back() - l1).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((tr(0.3) - l1).lpNorm<Eigen::Infinity>() < 1e-12);
    // L4 is linearly stable for this mass ratio
    Vec<4> l4 = lagrange_points(mu)[3];
    auto tr4 = propagate<4>(f, l4, 0.0, 50.0);
    CHECK((tr4.back() - l4).lpNorm<Eigen::Infinity>() < 1e-12);
  }

  TEST_CASE("harmonic oscillator against the closed form") {
    Oscillator f;
    Vec<2> y0(1.0, 0.0);
    auto tr = propagate<2>(f, y0, 0.0, 10.0);
    CHECK(std::abs(tr.back()[0] - std::cos(10.0)) < 1e-11);
    CHECK(std::abs(tr.back()[1] + std::sin(10.0)) < 1e-11);
    // dense output at interior times
    for (double t : {0.1, 1.7, 3.3, 6.0, 9.99}) {
      Vec<2> y = tr(t);
      CHECK(std::abs(y[0] - std::cos(t)) < 1e-10);
      CHECK(std::abs(y[1] + std::sin(t)) < 1e-10);
    }
    // sample times are reproduced exactly
    for (std::size_t i = 0; i < tr.t.size(); i += 7) CHECK((tr(tr.t[i]) - tr.y[i]).norm() == 0.0);
    // strictly monotone samples
    for (std::size_t i = 1; i < tr.t.size(); ++i) CHECK(tr.t[i] > tr.t[i - 1]);
  }

  TEST_CASE("backward propagation and flow inversion") {
    const double mu = 1.215e-2;
    CrtbpField<4> f{mu};
    Vec<4> x0(1.17, 0.0, 0.0, -0.05);
    auto back = propagate<4>(f, x0, 0.0, -3.0);
    CHECK(back.direction == -1);
    for (std::size_t i = 1; i < back.t.size(); ++i) CHECK(back.t[i] < back.t[i - 1]);
    auto fwd = propagate<4>(f, back.back(), -3.0, 0.0);
    CHECK((fwd.back() - x0).lpNorm<Eigen::Infinity>() < 1e-9);
    // dense evaluation on the backward trajectory
    Vec<4> mid = back(-1.5);
    Vec<4> direct = flow<4>(f, x0, 0.0, -1.5);
    CHECK((mid - direct).lpNorm<Eigen::Infinity>() < 1e-10);
  }

  TEST_CASE("energy drift over the heteroclinic duration") {
    const double mu = 1.215e-2;
    CrtbpField<4> f{mu};
    Vec<4> x0(0.83, 0.0, 0.0, 0.06);
    const double e0 = energy(mu, Eigen::VectorXd(x0));
    Vec<4> x1 = flow<4>(f, x0, 0.0, 8.9613933501964);
    CHECK(std::abs(energy(mu, Eigen::VectorXd(x1)) - e0) <= 1e-10);
  }

  TEST_CASE("tolerance refinement changes the endpoint by at most 1e-8") {
    const double mu = 1.215e-2;
    CrtbpField<6> f{mu};
    Vec<6> x0;
    x0 << 1.1, 0.0, 0.05, 0.0, 0.2, 0.0;
    Vec<6> a = flow<6>(f, x0, 0.0, 4.0, Tolerance{1e-12, 1e-12});
    Vec<6> b = flow<6>(f, x0, 0.0, 4.0, Tolerance{1e-13, 1e-13});
    CHECK((a - b).lpNorm<Eigen::Infinity>() <= 1e-8);
  }

  TEST_CASE("replaying the recorded step sequence reproduces the endpoint") {
    Oscillator f;
    std::vector<double> steps;
    Vec<2> y0(0.3, 0.8);
    Vec<2> a = flow<2>(f, y0, 0.0, 7.0, Tolerance{}, &steps);
    Vec<2> b = flow_fixed_steps<2>(f, y0, 0.0, 7.0, steps);
    CHECK((a - b).norm() < 1e-14);
  }

  TEST_CASE("event location on the dense output") {
    Oscillator f;
    Vec<2> y0(1.0, 0.0);
    EventSpec<2> ev;
    ev.g = [](const Vec<2>& y) { return y[0]; };
    ev.direction = -1;
    auto hit = propagate_to_event<2>(f, y0, 0.0, 20.0, ev);
    CHECK(std::abs(hit.state[0]) <= 1e-12);
    CHECK(hit.t == doctest::Approx(kPi / 2).epsilon(1e-12));

    ev.direction = +1;
    hit = propagate_to_event<2>(f, y0, 0.0, 20.0, ev);
    CHECK(hit.t == doctest::Approx(1.5 * kPi).epsilon(1e-12));

    ev.direction = 0;
    ev.count = 3;
    hit = propagate_to_event<2>(f, y0, 0.0, 20.0, ev);
    CHECK(hit.t == doctest::Approx(2.5 * kPi).epsilon(1e-12));

    // backward in time: crossing with dg/dt < 0 in physical time
    ev.count = 1;
    ev.direction = -1;
    hit = propagate_to_event<2>(f, y0, 0.0, -20.0, ev);
    CHECK(hit.t == doctest::Approx(-1.5 * kPi).epsilon(1e-12));
  }

  TEST_CASE("event already satisfied at the initial state") {
    Oscillator f;
    Vec<2> y0(0.0, -1.0);
    EventSpec<2> ev;
    ev.g = [](const Vec<2>& y) { return y[0]; };
    ev.direction = -1;
    auto hit = propagate_to_event<2>(f, y0, 0.0, 20.0, ev);
    CHECK(std::abs(hit.t) < 1e-12);
  }

  TEST_CASE("section event on a Moon-bound CRTBP trajectory") {
    const double mu = 1.215e-2;
    CrtbpField<4> f{mu};
    Vec<4> x0(0.85, 0.0, 0.0, 0.17);
    EventSpec<4> ev;
    ev.g = [mu](const Vec<4>& s) { return s[0] - (1.0 - mu); };
    auto hit = propagate_to_event<4>(f, x0, 0.0, 12.0, ev);
    CHECK(std::abs(hit.state[0] - (1.0 - mu)) <= 1e-12);
  }

  TEST_CASE("missing event raises") {
    Oscillator f;
    Vec<2> y0(2.0, 0.0);
    EventSpec<2> ev;
    ev.g = [](const Vec<2>& y) { return y[0] - 5.0; };
    CHECK_THROWS_AS(propagate_to_event<2>(f, y0, 0.0, 10.0, ev), NoEventError);
  }

  TEST_CASE("Newton on an affine residual converges in one iteration") {
    Eigen::VectorXd c(3);
    c << 1.0, -2.0, 3.5;
    ResidualFn f = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(x - c); };
    JacobianFn jac = [](const Eigen::VectorXd& x, const Eigen::VectorXd&) {
      return Eigen::MatrixXd(Eigen::MatrixXd::Identity(x.size(), x.size()));
    };
    auto r = newton_solve(f, Eigen::VectorXd::Zero(3), {}, jac);
    CHECK(r.iterations == 1);
    CHECK((r.x - c).norm() < 1e-12);
    // finite-difference Jacobian: roundoff in the difference quotient may cost one extra step
    auto r_fd = newton_solve(f, Eigen::VectorXd::Zero(3));
    CHECK(r_fd.iterations <= 2);
    CHECK(r_fd.residual_norm <= 1e-10);
  }

  TEST_CASE("Newton reports a singular Jacobian") {
    auto f = [](const Eigen::VectorXd& x) {
      Eigen::VectorXd r(1);
      r[0] = x[0] * x[0] + 1.0;
      return r;
    };
    CHECK_THROWS_AS(newton_solve(f, Eigen::VectorXd::Zero(1)), NonConvergence);
  }

  TEST_CASE("damped Newton on a nonlinear system with monotone residual") {
    auto f = [](const Eigen::VectorXd& x) {
      Eigen::VectorXd r(2);
      r[0] = 10.0 * (x[1] - x[0] * x[0]);
      r[1] = 1.0 - x[0];
      return r;
    };
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    auto r = newton_solve(f, x0);
    CHECK(r.residual_norm <= 1e-10);
    CHECK(std::abs(r.x[0] - 1.0) < 1e-9);
  }

  TEST_CASE("central-difference Jacobian matches the analytic one") {
    auto f = [](const Eigen::VectorXd& x) {
      Eigen::VectorXd r(2);
      r << std::sin(x[0]) * x[1], std::exp(x[0]) + x[1] * x[1];
      return r;
    };
    Eigen::VectorXd x(2);
    x << 0.4, -1.3;
    Eigen::MatrixXd J = fd_jacobian(f, x);
    Eigen::MatrixXd Ja(2, 2);
    Ja << std::cos(0.4) * -1.3, std::sin(0.4), std::exp(0.4), -2.6;
    CHECK((J - Ja).norm() < 1e-7);
  }

  TEST_CASE("continuation with a constant family returns the seed") {
    Eigen::VectorXd c(2);
    c << 0.5, 0.25;
    auto fam = [&](double, const Eigen::VectorXd& x) { return Eigen::VectorXd(x - c); };
    auto r = continuation_run(fam, ContinuationSchedule::uniform(50), c);
    CHECK((r.solution - c).norm() == 0.0);
    CHECK(r.steps == 50);
  }

  TEST_CASE("constant and linear predictors agree") {
    auto fam = [](double lam, const Eigen::VectorXd& x) {
      Eigen::VectorXd r(2);
      r << x[0] * x[0] * x[0] + x[0] - 2.0 * lam, x[1] - std::sin(x[0]) - lam;
      return r;
    };
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(2);
    auto a = continuation_run(fam, ContinuationSchedule::uniform(20, Predictor::constant), x0);
    auto b = continuation_run(fam, ContinuationSchedule::uniform(20, Predictor::linear), x0);
    CHECK((a.solution - b.solution).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK(a.solution[0] == doctest::Approx(1.0));
    CHECK(a.lambdas.size() == a.path.size());
  }

  TEST_CASE("continuation stalls where the branch ends") {
    // x^2 = 0.5 - lambda has no real root past lambda = 0.5
    auto fam = [](double lam, const Eigen::VectorXd& x) {
      Eigen::VectorXd r(1);
      r[0] = x[0] * x[0] - (0.5 - lam);
      return r;
    };
    Eigen::VectorXd x0(1);
    x0[0] = std::sqrt(0.5);
    try {
      continuation_run(fam, ContinuationSchedule::uniform(10), x0);
      FAIL("expected a stall");
    } catch (const ContinuationStall& e) {
      CHECK(e.last_lambda() <= 0.5);
      CHECK(e.last_lambda() > 0.3);
    }
  }

  TEST_CASE("schedule validation") {
    ContinuationSchedule s;
    s.grid = {0.0, 0.5, 0.4, 1.0};
    CHECK_THROWS_AS(s.validate(), PreconditionError);
  }
}
