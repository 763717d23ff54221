#include "lowthrust/orbits.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include "lowthrust/variational.hpp"

namespace lowthrust {

namespace {

double collinear_c2(double mu, double xl) {
  const double r1 = std::abs(xl + mu), r2 = std::abs(xl - 1 + mu);
  return (1 - mu) / (r1 * r1 * r1) + mu / (r2 * r2 * r2);
}

OrbitGuess planar_guess(const SystemParams& p, int center, double amplitude) {
  const double xl = collinear_point(p.mu, center);
  const double c2 = collinear_c2(p.mu, xl);
  // in-plane oscillation frequency of the linearized flow
  const double lam = std::sqrt((2 - c2 + std::sqrt(9 * c2 * c2 - 8 * c2)) / 2);
  const double k = (lam * lam + 1 + 2 * c2) / (2 * lam);
  OrbitGuess g;
  g.center = center;
  g.state = Eigen::VectorXd::Zero(4);
  g.state[0] = xl - amplitude;
  g.state[3] = amplitude * k * lam;
  g.period = 2 * kPi / lam;
  if (amplitude < 0) {
    g.valid = false;
    g.note = "negative amplitude";
  } else if (amplitude > 0.05) {
    g.valid = false;
    g.note = "amplitude beyond the range of the linear approximation";
  }
  return g;
}

// Third-order Halo approximation. Coefficients from D. L. Richardson,
// "Analytic construction of periodic orbits about the collinear points",
// Celestial Mechanics 22 (1980) 241-253, in the sign convention where the
// local x-axis points from the libration point away from the larger primary.
OrbitGuess halo_guess(const SystemParams& p, int center, double amplitude) {
  if (center != 1 && center != 2) throw PreconditionError("Halo guess available about L1 and L2 only");
  const double mu = p.mu;
  const double xl = collinear_point(mu, center);
  const double gamma = (center == 1) ? (1 - mu) - xl : xl - (1 - mu);

  auto cn = [&](int n) {
    const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
    if (center == 1)
      return (mu + sgn * (1 - mu) * std::pow(gamma / (1 - gamma), n + 1)) / std::pow(gamma, 3);
    return (sgn * mu + sgn * (1 - mu) * std::pow(gamma / (1 + gamma), n + 1)) / std::pow(gamma, 3);
  };
  const double c2 = cn(2), c3 = cn(3), c4 = cn(4);
  const double lam = std::sqrt((2 - c2 + std::sqrt((c2 - 2) * (c2 - 2) + 4 * (c2 - 1) * (1 + 2 * c2))) / 2);
  const double l2 = lam * lam;
  const double k = 2 * lam / (l2 + 1 - c2);
  const double delta = l2 - c2;
  const double d1 = 3 * l2 / k * (k * (6 * l2 - 1) - 2 * lam);
  const double d2 = 8 * l2 / k * (k * (11 * l2 - 1) - 2 * lam);

  const double a21 = 3 * c3 * (k * k - 2) / (4 * (1 + 2 * c2));
  const double a22 = 3 * c3 / (4 * (1 + 2 * c2));
  const double a23 = -3 * c3 * lam / (4 * k * d1) * (3 * k * k * k * lam - 6 * k * (k - lam) + 4);
  const double a24 = -3 * c3 * lam / (4 * k * d1) * (2 + 3 * k * lam);
  const double b21 = -3 * c3 * lam / (2 * d1) * (3 * k * lam - 4);
  const double b22 = 3 * c3 * lam / d1;
  const double d21 = -c3 / (2 * l2);

  const double a31 = -9 * lam / (4 * d2) * (4 * c3 * (k * a23 - b21) + k * c4 * (4 + k * k)) +
                     (9 * l2 + 1 - c2) / (2 * d2) * (3 * c3 * (2 * a23 - k * b21) + c4 * (2 + 3 * k * k));
  const double a32 = -1 / d2 *
                     (9 * lam / 4 * (4 * c3 * (k * a24 - b22) + k * c4) +
                      1.5 * (9 * l2 + 1 - c2) * (c3 * (k * b22 + d21 - 2 * a24) - c4));
  const double b31 = 3 / (8 * d2) *
                     (8 * lam * (3 * c3 * (k * b21 - 2 * a23) - c4 * (2 + 3 * k * k)) +
                      (9 * l2 + 1 + 2 * c2) * (4 * c3 * (k * a23 - b21) + k * c4 * (4 + k * k)));
  const double b32 = 1 / d2 *
                     (9 * lam * (c3 * (k * b22 + d21 - 2 * a24) - c4) +
                      3.0 / 8.0 * (9 * l2 + 1 + 2 * c2) * (4 * c3 * (k * a24 - b22) + k * c4));
  const double d31 = 3 / (64 * l2) * (4 * c3 * a24 + c4);
  const double d32 = 3 / (64 * l2) * (4 * c3 * (a23 - d21) + c4 * (4 + k * k));

  const double den = 2 * lam * (lam * (1 + k * k) - 2 * k);
  const double s1 = (1.5 * c3 * (2 * a21 * (k * k - 2) - a23 * (k * k + 2) - 2 * k * b21) -
                     3.0 / 8.0 * c4 * (3 * k * k * k * k - 8 * k * k + 8)) /
                    den;
  const double s2 = (1.5 * c3 * (2 * a22 * (k * k - 2) + a24 * (k * k + 2) + 2 * k * b22 + 5 * d21) +
                     3.0 / 8.0 * c4 * (12 - k * k)) /
                    den;
  const double l1c = -1.5 * c3 * (2 * a21 + a23 + 5 * d21) - 3.0 / 8.0 * c4 * (12 - k * k) + 2 * l2 * s1;
  const double l2c = 1.5 * c3 * (a24 - 2 * a22) + 9.0 / 8.0 * c4 + 2 * l2 * s2;

  OrbitGuess g;
  g.center = center;
  const double dn = amplitude >= 0 ? 1.0 : -1.0;
  const double az = std::abs(amplitude) / gamma;
  const double radicand = (-l2c * az * az - delta) / l1c;
  double ax = 0.0;
  if (radicand < 0) {
    g.valid = false;
    g.note = "z-amplitude below the Halo bifurcation; in-plane amplitude set to zero";
  } else {
    ax = std::sqrt(radicand);
  }
  if (az > 0.5) {
    g.valid = false;
    g.note = "z-amplitude too large for the third-order expansion";
  }
  const double omega = 1 + s1 * ax * ax + s2 * az * az;
  const double x = a21 * ax * ax + a22 * az * az - ax + (a23 * ax * ax - a24 * az * az) +
                   (a31 * ax * ax * ax - a32 * ax * az * az);
  const double z = dn * (az + d21 * ax * az * (1 - 3) + (d32 * az * ax * ax - d31 * az * az * az));
  const double vy =
      lam * omega * (k * ax + 2 * (b21 * ax * ax - b22 * az * az) + 3 * (b31 * ax * ax * ax - b32 * ax * az * az));

  g.state = Eigen::VectorXd::Zero(6);
  g.state[0] = xl + gamma * x;
  g.state[2] = gamma * z;
  g.state[4] = gamma * vy;
  g.period = 2 * kPi / (lam * omega);
  return g;
}

// Single-shooting problem on the symmetry conditions at T/2.
struct SymmetricShooting {
  double mu;
  Eigen::VectorXd base;       // state with the held coordinates
  std::vector<int> free_idx;  // state components solved for
  std::vector<int> res_idx;   // components that must vanish at T/2
  std::optional<double> energy_target;
  Tolerance tol;

  int n_unknowns() const { return static_cast<int>(free_idx.size()) + 1; }

  Eigen::VectorXd pack(const Eigen::VectorXd& state, double period) const {
    Eigen::VectorXd u(n_unknowns());
    for (std::size_t i = 0; i < free_idx.size(); ++i) u[i] = state[free_idx[i]];
    u[u.size() - 1] = period;
    return u;
  }

  Eigen::VectorXd state_of(const Eigen::VectorXd& u) const {
    Eigen::VectorXd s = base;
    for (std::size_t i = 0; i < free_idx.size(); ++i) s[free_idx[i]] = u[i];
    return s;
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& u) const {
    const Eigen::VectorXd s0 = state_of(u);
    const double half = 0.5 * u[u.size() - 1];
    if (!(half > 0)) throw PropagationFailure("non-positive period", 0.0);
    const Eigen::VectorXd s = crtbp_flow(mu, s0, 0.0, half, tol);
    Eigen::VectorXd r(n_unknowns());
    for (std::size_t i = 0; i < res_idx.size(); ++i) r[i] = s[res_idx[i]];
    if (energy_target) r[r.size() - 1] = energy(mu, s0) - *energy_target;
    return r;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& u) const {
    const Eigen::VectorXd s0 = state_of(u);
    const double half = 0.5 * u[u.size() - 1];
    const FlowWithStm fs = flow_with_stm(mu, s0, 0.0, half, tol);
    const Eigen::VectorXd f = crtbp_field<Eigen::Dynamic>(mu, fs.state);
    const int m = n_unknowns();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t i = 0; i < res_idx.size(); ++i) {
      for (std::size_t j = 0; j < free_idx.size(); ++j) J(i, j) = fs.stm(res_idx[i], free_idx[j]);
      J(i, m - 1) = 0.5 * f[res_idx[i]];
    }
    if (energy_target) {
      const int d = static_cast<int>(s0.size()) / 2;
      double a[3];
      const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
      crtbp_acceleration(mu, d, s0.data(), zero.data(), a);
      for (std::size_t j = 0; j < free_idx.size(); ++j) {
        const int c = free_idx[j];
        J(m - 1, j) = (c < d) ? -a[c] : s0[c];
      }
    }
    return J;
  }

  PeriodicOrbit solve(const Eigen::VectorXd& u0, const NewtonOptions& nopt, int center) const {
    auto res = newton_solve([this](const Eigen::VectorXd& u) { return residual(u); }, u0, nopt,
                            [this](const Eigen::VectorXd& u, const Eigen::VectorXd&) { return jacobian(u); });
    PeriodicOrbit o;
    o.initial_state = state_of(res.x);
    o.period = res.x[res.x.size() - 1];
    o.energy = energy(mu, o.initial_state);
    o.center = center;
    o.iterations = res.iterations;
    return o;
  }
};

SymmetricShooting make_shooting(const SystemParams& p, const Eigen::VectorXd& state, FixedCoordinate fixed,
                                bool energy_mode, const Tolerance& tol) {
  SymmetricShooting sh;
  sh.mu = p.mu;
  sh.base = state;
  sh.tol = tol;
  const bool spatial = state.size() == 6;
  if (!spatial) {
    sh.res_idx = {1, 2};
    sh.free_idx = energy_mode ? std::vector<int>{0, 3} : std::vector<int>{3};
    if (!energy_mode && fixed == FixedCoordinate::z0)
      throw PreconditionError("planar orbits can only hold x0 fixed");
  } else {
    sh.res_idx = {1, 3, 5};
    if (energy_mode)
      sh.free_idx = {0, 2, 4};
    else
      sh.free_idx = (fixed == FixedCoordinate::x0) ? std::vector<int>{2, 4} : std::vector<int>{0, 4};
  }
  return sh;
}

void check_symmetric_state(const Eigen::VectorXd& s) {
  dimension_of_state(s.size());
  const bool spatial = s.size() == 6;
  const double y = s[1], vx = spatial ? s[3] : s[2], vz = spatial ? s[5] : 0.0;
  if (y != 0.0 || vx != 0.0 || vz != 0.0)
    throw PreconditionError("periodic orbit state must lie on the symmetry plane (y = vx = vz = 0)");
}

}  // namespace

OrbitGuess richardson_guess(const SystemParams& p, int center, double amplitude, Dimension dim) {
  if (center < 1 || center > 3) throw PreconditionError("center must be a collinear point index 1..3");
  return dim == Dimension::planar ? planar_guess(p, center, amplitude) : halo_guess(p, center, amplitude);
}

PeriodicOrbit correct_orbit(const SystemParams& p, const OrbitGuess& guess, FixedCoordinate fixed,
                            const OrbitSolveOptions& opt) {
  check_symmetric_state(guess.state);
  auto sh = make_shooting(p, guess.state, fixed, false, opt.tol);
  try {
    return sh.solve(sh.pack(guess.state, guess.period), opt.newton, guess.center);
  } catch (const NonConvergence& e) {
    throw NonConvergence(std::string("orbit correction failed: ") + e.what(), e.best_iterate(), e.best_norm());
  }
}

Eigen::VectorXd half_period_residual(const SystemParams& p, const PeriodicOrbit& o, const Tolerance& tol) {
  const Eigen::VectorXd s = crtbp_flow(p.mu, o.initial_state, 0.0, 0.5 * o.period, tol);
  if (s.size() == 4) return Eigen::Vector2d(s[1], s[2]);
  return Eigen::Vector3d(s[1], s[3], s[5]);
}

double closure_error(const SystemParams& p, const PeriodicOrbit& o, const Tolerance& tol) {
  return (crtbp_flow(p.mu, o.initial_state, 0.0, o.period, tol) - o.initial_state).norm();
}

namespace {

PeriodicOrbit run_family(const SystemParams& p, const PeriodicOrbit& orbit0, bool energy_mode, double start,
                         double target, const ContinuationSchedule& schedule, FamilyReport* report,
                         const OrbitSolveOptions& opt) {
  check_symmetric_state(orbit0.initial_state);
  const bool spatial = orbit0.initial_state.size() == 6;
  // x0 continuation holds x fixed; the Halo variant solves for z0 as well.
  auto sh = make_shooting(p, orbit0.initial_state, FixedCoordinate::x0, energy_mode, opt.tol);
  const Eigen::VectorXd u0 = sh.pack(orbit0.initial_state, orbit0.period);

  auto configure = [&, start, target](double lam) {
    SymmetricShooting s = sh;
    const double value = start + lam * (target - start);
    if (energy_mode)
      s.energy_target = value;
    else
      s.base[0] = value;
    return s;
  };
  FamilyFn family = [&](double lam, const Eigen::VectorXd& u) { return configure(lam).residual(u); };
  FamilyJacobianFn jac = [&](double lam, const Eigen::VectorXd& u, const Eigen::VectorXd&) {
    return configure(lam).jacobian(u);
  };
  std::vector<PeriodicOrbit> members;
  auto to_orbit = [&](double lam, const Eigen::VectorXd& u) {
    const SymmetricShooting s = configure(lam);
    PeriodicOrbit o;
    o.initial_state = s.state_of(u);
    o.period = u[u.size() - 1];
    o.energy = energy(p.mu, o.initial_state);
    o.center = orbit0.center;
    return o;
  };
  members.push_back(orbit0);
  auto on_step = [&](double lam, const Eigen::VectorXd& u) { members.push_back(to_orbit(lam, u)); };

  // Spatial families must keep the sign of z0 and not collapse onto the plane.
  const double z_ref = spatial ? orbit0.initial_state[2] : 0.0;
  auto stays_on_branch = [&](double lam, const Eigen::VectorXd& u) {
    if (!(u[u.size() - 1] > 0)) return false;
    if (!spatial) return true;
    const double z0 = configure(lam).state_of(u)[2];
    return z0 * z_ref > 0 && std::abs(z0) > 1e-3 * std::abs(z_ref);
  };
  ContinuationResult cr;
  try {
    cr = continuation_run(family, schedule, u0, opt.newton, jac, on_step, stays_on_branch);
  } catch (const ContinuationStall& e) {
    std::ostringstream msg;
    msg << "orbit family continuation stalled at lambda = " << e.last_lambda() << " ("
        << (energy_mode ? "energy " : "x0 ") << start + e.last_lambda() * (target - start) << ")";
    throw ContinuationStall(msg.str(), e.last_lambda(), e.last_solution());
  }
  PeriodicOrbit out = to_orbit(1.0, cr.solution);
  if (report) {
    report->members = members;
    report->continuation_steps = cr.steps;
    report->refinements = cr.refinements;
    // energy against a size measure: the distance of x0 from the libration point
    const double xl = collinear_point(p.mu, orbit0.center);
    int sign = 0;
    report->energy_monotone = true;
    for (std::size_t i = 1; i < members.size(); ++i) {
      const double da = std::abs(members[i].initial_state[0] - xl) - std::abs(members[i - 1].initial_state[0] - xl);
      const double de = members[i].energy - members[i - 1].energy;
      if (da == 0.0 || de == 0.0) continue;
      const int s = ((da > 0) == (de > 0)) ? 1 : -1;
      if (sign == 0) sign = s;
      if (s != sign) report->energy_monotone = false;
    }
  }
  return out;
}

}  // namespace

PeriodicOrbit continue_family_x0(const SystemParams& p, const PeriodicOrbit& orbit0, double x0_target,
                                 const ContinuationSchedule& schedule, FamilyReport* report,
                                 const OrbitSolveOptions& opt) {
  if (x0_target == orbit0.initial_state[0]) {
    if (report) report->members = {orbit0};
    return orbit0;
  }
  return run_family(p, orbit0, false, orbit0.initial_state[0], x0_target, schedule, report, opt);
}

PeriodicOrbit continue_family_energy(const SystemParams& p, const PeriodicOrbit& orbit0, double energy_target,
                                     const ContinuationSchedule& schedule, FamilyReport* report,
                                     const OrbitSolveOptions& opt) {
  const double e_center = energy(p.mu, Eigen::VectorXd(lagrange_points(p.mu)[orbit0.center - 1]));
  if (energy_target < e_center) {
    std::ostringstream msg;
    msg.precision(10);
    msg << "target energy " << energy_target << " lies below the energy " << e_center << " of L" << orbit0.center
        << "; no periodic orbit about it exists";
    throw PreconditionError(msg.str());
  }
  if (energy_target == orbit0.energy) {
    if (report) report->members = {orbit0};
    return orbit0;
  }
  return run_family(p, orbit0, true, orbit0.energy, energy_target, schedule, report, opt);
}

std::vector<Eigen::VectorXd> sample_orbit(const SystemParams& p, const PeriodicOrbit& o, int n, const Tolerance& tol) {
  if (n < 1) throw PreconditionError("need at least one sample");
  std::vector<Eigen::VectorXd> out;
  out.reserve(n);
  auto sample = [&](auto tag) {
    constexpr int D = decltype(tag)::value;
    CrtbpField<D> f{p.mu};
    OdeOptions opt;
    opt.tol = tol;
    auto tr = propagate<D>(f, Vec<D>(o.initial_state), 0.0, o.period, opt);
    for (int k = 0; k < n; ++k) out.emplace_back(tr(o.period * k / n));
  };
  if (o.initial_state.size() == 4)
    sample(std::integral_constant<int, 4>{});
  else
    sample(std::integral_constant<int, 6>{});
  return out;
}

Eigen::VectorXd orbit_state_at(const SystemParams& p, const PeriodicOrbit& o, double t, const Tolerance& tol) {
  double tm = std::fmod(t, o.period);
  if (tm < 0) tm += o.period;
  if (tm == 0.0) return o.initial_state;
  return crtbp_flow(p.mu, o.initial_state, 0.0, tm, tol);
}

}  // namespace lowthrust
