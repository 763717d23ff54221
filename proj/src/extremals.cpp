#include "lowthrust/extremals.hpp"

#include <cmath>
#include <sstream>

namespace lowthrust {

namespace {

template <class Fn>
decltype(auto) dispatch_extremal(Eigen::Index size, Fn&& fn) {
  if (size == 10) return fn(std::integral_constant<int, 10>{});
  if (size == 14) return fn(std::integral_constant<int, 14>{});
  throw PreconditionError("extremal state must have 10 or 14 components");
}

// Unknowns of the shooting problems are costates divided by costate_scale.
struct ScaledShooting {
  const SystemParams& params;
  TransferProblem prob;
  Eigen::VectorXd scale;
  ExtremalOptions opt;

  int n() const { return static_cast<int>(prob.start.size()); }

  Eigen::VectorXd initial(const Eigen::VectorXd& w) const {
    const Eigen::VectorXd c = w.cwiseProduct(scale);
    return make_extremal(prob.start, prob.mass, c.head(n()), c[n()]);
  }

  Eigen::VectorXd residual_of(const Eigen::VectorXd& final) const {
    Eigen::VectorXd r(n() + 1);
    r.head(n()) = final.head(n()) - prob.target;
    r[n()] = final[2 * n() + 1] / scale[n()];
    return r;
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& w) const {
    return residual_of(extremal_flow(params, initial(w), prob.duration, prob.epsilon, opt));
  }

  // Central differences on the step sequence of the nominal propagation.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& w) const {
    std::vector<double> steps;
    extremal_flow(params, initial(w), prob.duration, prob.epsilon, opt, &steps);
    const int m = n() + 1;
    Eigen::MatrixXd J(m, m);
    const double h = std::max(1e-7 * w.lpNorm<Eigen::Infinity>(), 1e-9);
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      const Eigen::VectorXd fp = residual_of(extremal_flow_steps(params, initial(wp), prob.duration, prob.epsilon, steps));
      const Eigen::VectorXd fm = residual_of(extremal_flow_steps(params, initial(wm), prob.duration, prob.epsilon, steps));
      J.col(j) = (fp - fm) / (2 * h);
    }
    return J;
  }
};

}  // namespace

int state_size_of_extremal(Eigen::Index size) {
  if (size == 10) return 4;
  if (size == 14) return 6;
  throw PreconditionError("extremal state must have 10 or 14 components");
}

Eigen::VectorXd make_extremal(const Eigen::VectorXd& x, double m, const Eigen::VectorXd& p, double pm) {
  const int n = static_cast<int>(x.size());
  dimension_of_state(n);
  if (p.size() != n) throw PreconditionError("costate dimension must match the state");
  Eigen::VectorXd e(extremal_size(n));
  e << x, m, p, pm;
  return e;
}

ControlLaw control_law(const SystemParams& p, const Eigen::VectorXd& e, double eps) {
  const auto v = ExtremalView::of(e);
  const int d = v.n / 2;
  ControlLaw c;
  c.u = Eigen::VectorXd::Zero(d);
  detail::control_kernel(d, e.data() + v.costate() + d, e[v.mass()], e[v.mass_costate()], eps, p.beta_star(),
                         c.u.data(), &c.psi, &c.singular);
  return c;
}

double hamiltonian(const SystemParams& p, const Eigen::VectorXd& e, double eps, const Eigen::VectorXd& u) {
  const auto v = ExtremalView::of(e);
  const int n = v.n, d = n / 2;
  const Eigen::VectorXd x = e.head(n);
  const double m = e[v.mass()];
  const Eigen::VectorXd pc = e.segment(v.costate(), n);
  const double pm = e[v.mass_costate()];
  Eigen::VectorXd f = crtbp_field<Eigen::Dynamic>(p.mu, x);
  f.tail(d) += (eps / m) * u;
  return -u.squaredNorm() + pc.dot(f) - pm * p.beta_star() * eps * u.norm();
}

double hamiltonian(const SystemParams& p, const Eigen::VectorXd& e, double eps) {
  return hamiltonian(p, e, eps, control_law(p, e, eps).u);
}

Eigen::VectorXd extremal_field(const SystemParams& p, const Eigen::VectorXd& e, double eps) {
  ExtremalView::of(e);
  return ExtremalField<Eigen::Dynamic>{p.mu, eps, p.beta_star()}(0.0, e);
}

Eigen::VectorXd extremal_flow(const SystemParams& p, const Eigen::VectorXd& e0, double duration, double eps,
                              const ExtremalOptions& opt, std::vector<double>* steps) {
  return dispatch_extremal(e0.size(), [&](auto tag) -> Eigen::VectorXd {
    constexpr int N = decltype(tag)::value;
    ExtremalField<N> f{p.mu, eps, p.beta_star()};
    return flow<N>(f, Vec<N>(e0), 0.0, duration, opt.tol, steps);
  });
}

Eigen::VectorXd extremal_flow_steps(const SystemParams& p, const Eigen::VectorXd& e0, double duration, double eps,
                                    const std::vector<double>& steps) {
  return dispatch_extremal(e0.size(), [&](auto tag) -> Eigen::VectorXd {
    constexpr int N = decltype(tag)::value;
    ExtremalField<N> f{p.mu, eps, p.beta_star()};
    return flow_fixed_steps<N>(f, Vec<N>(e0), 0.0, duration, steps);
  });
}

Trajectory<Eigen::Dynamic> extremal_trajectory(const SystemParams& p, const Eigen::VectorXd& e0, double duration,
                                               double eps, const ExtremalOptions& opt) {
  ExtremalView::of(e0);
  ExtremalField<Eigen::Dynamic> f{p.mu, eps, p.beta_star()};
  OdeOptions o;
  o.tol = opt.tol;
  return propagate<Eigen::Dynamic>(f, e0, 0.0, duration, o);
}

ArcCosts arc_costs(const SystemParams& p, const Eigen::VectorXd& e0, double duration, double eps,
                   double thrust_newtons, const ExtremalOptions& opt, int samples) {
  const auto v = ExtremalView::of(e0);
  const int ne = static_cast<int>(e0.size());
  Eigen::VectorXd y0 = Eigen::VectorXd::Zero(ne + 3);
  y0.head(ne) = e0;
  ExtremalCostField<Eigen::Dynamic> f{p.mu, eps, p.beta_star()};
  OdeOptions o;
  o.tol = opt.tol;
  const auto tr = propagate<Eigen::Dynamic>(f, y0, 0.0, duration, o);
  const Eigen::VectorXd yf = tr.back();
  ArcCosts c;
  c.cost1 = yf[ne];
  c.cost2 = yf[ne + 1];
  // (Tmax / m)^2 = (Tmax / eps)^2 (eps / m)^2, time converted to seconds
  const double k = thrust_newtons / eps;
  c.cost3 = k * k * c.cost2 * p.time_unit();
  c.fuel = e0[v.mass()] - yf[v.mass()];
  const double h0 = hamiltonian(p, e0, eps);
  for (int i = 0; i <= samples; ++i) {
    const double t = duration * i / samples;
    const Eigen::VectorXd e = tr(t).head(ne);
    c.max_control = std::max(c.max_control, control_law(p, e, eps).u.norm());
    c.hamiltonian_drift = std::max(c.hamiltonian_drift, std::abs(hamiltonian(p, e, eps) - h0));
  }
  return c;
}

void TransferProblem::validate() const {
  dimension_of_state(start.size());
  if (target.size() != start.size()) throw PreconditionError("transfer target must match the start dimension");
  if (!(duration > 0)) throw PreconditionError("transfer duration must be positive");
  if (!(epsilon > 0)) throw PreconditionError("thrust coefficient must be positive");
  if (!(mass > 0)) throw PreconditionError("initial mass must be positive");
  if (!start.allFinite() || !target.allFinite()) throw PreconditionError("transfer endpoints must be finite");
}

Eigen::VectorXd costate_scale(const SystemParams& p, int n, double mass, double eps) {
  Eigen::VectorXd s(n + 1);
  s.head(n).setConstant(2.0 * mass / eps);
  s[n] = 2.0 / (p.beta_star() * eps);
  return s;
}

Eigen::VectorXd shooting_residual(const SystemParams& p, const TransferProblem& prob, const Eigen::VectorXd& costate0,
                                  const ExtremalOptions& opt) {
  prob.validate();
  const int n = static_cast<int>(prob.start.size());
  if (costate0.size() != n + 1) throw PreconditionError("costate guess must have n + 1 components");
  const Eigen::VectorXd e0 = make_extremal(prob.start, prob.mass, costate0.head(n), costate0[n]);
  const Eigen::VectorXd ef = extremal_flow(p, e0, prob.duration, prob.epsilon, opt);
  Eigen::VectorXd r(n + 1);
  r.head(n) = ef.head(n) - prob.target;
  r[n] = ef[2 * n + 1];
  return r;
}

namespace {

TransferSolution finish(const SystemParams& p, const ScaledShooting& sh, const Eigen::VectorXd& w,
                        const NewtonResult& nr) {
  TransferSolution s;
  s.costate0 = w.cwiseProduct(sh.scale);
  s.initial = sh.initial(w);
  s.final = extremal_flow(p, s.initial, sh.prob.duration, sh.prob.epsilon, sh.opt);
  s.duration = sh.prob.duration;
  s.epsilon = sh.prob.epsilon;
  s.residual_norm = nr.residual_norm;
  s.iterations = nr.iterations;
  s.condition_estimate = nr.condition_estimate;
  return s;
}

}  // namespace

TransferSolution shoot_single(const SystemParams& p, const TransferProblem& prob, const Eigen::VectorXd& guess,
                              const NewtonOptions& newton, const ExtremalOptions& opt) {
  prob.validate();
  const int n = static_cast<int>(prob.start.size());
  if (guess.size() != n + 1 || !guess.allFinite()) throw PreconditionError("costate guess must be finite with n + 1 components");
  ScaledShooting sh{p, prob, costate_scale(p, n, prob.mass, prob.epsilon), opt};
  const Eigen::VectorXd w0 = guess.cwiseQuotient(sh.scale);
  const auto nr = newton_solve([&](const Eigen::VectorXd& w) { return sh.residual(w); }, w0, newton,
                               [&](const Eigen::VectorXd& w, const Eigen::VectorXd&) { return sh.jacobian(w); });
  return finish(p, sh, nr.x, nr);
}

Anchors build_anchor_points(const SystemParams& p, const PeriodicOrbit& orbit, const Eigen::VectorXd& seed,
                            AnchorSide side, double t_orbit, double t_manifold, int n_disc, const Tolerance& tol) {
  if (seed.size() != orbit.initial_state.size()) throw PreconditionError("seed and orbit dimensions differ");
  if (t_orbit < 0 || t_manifold < 0) throw PreconditionError("anchor times must be non-negative");
  const auto pts = sample_orbit(p, orbit, n_disc, tol);
  std::size_t best = 0;
  for (std::size_t k = 1; k < pts.size(); ++k)
    if ((pts[k] - seed).norm() < (pts[best] - seed).norm()) best = k;
  Anchors a;
  a.orbit_point = pts[best];
  a.orbit_phase = orbit.period * static_cast<double>(best) / n_disc;
  a.seed = seed;
  a.duration = t_orbit + t_manifold;
  if (side == AnchorSide::departure) {
    a.start = crtbp_flow(p.mu, a.orbit_point, 0.0, -t_orbit, tol);
    a.end = crtbp_flow(p.mu, seed, 0.0, t_manifold, tol);
  } else {
    a.start = crtbp_flow(p.mu, seed, 0.0, -t_manifold, tol);
    a.end = crtbp_flow(p.mu, a.orbit_point, 0.0, t_orbit, tol);
  }
  return a;
}

TransferSolution solve_local_transfer(const SystemParams& p, const Anchors& anchors, double mass, double eps,
                                      const ContinuationSchedule& schedule, const ExtremalOptions& opt) {
  TransferProblem prob{anchors.start, mass, anchors.end, anchors.duration, eps};
  prob.validate();
  const int n = static_cast<int>(prob.start.size());
  // the uncontrolled image of the start solves the lambda = 0 problem
  const Eigen::VectorXd natural =
      extremal_flow(p, make_extremal(prob.start, mass, Eigen::VectorXd::Zero(n), 0.0), prob.duration, eps, opt)
          .head(n);
  ScaledShooting sh{p, prob, costate_scale(p, n, mass, eps), opt};
  auto at = [&](double lam) {
    ScaledShooting s = sh;
    s.prob.target = (1 - lam) * natural + lam * anchors.end;
    return s;
  };
  FamilyFn family = [&](double lam, const Eigen::VectorXd& w) { return at(lam).residual(w); };
  FamilyJacobianFn jac = [&](double lam, const Eigen::VectorXd& w, const Eigen::VectorXd&) {
    return at(lam).jacobian(w);
  };
  NewtonOptions newton{1e-10, 30, 30, 1e-7, false, 1};
  ContinuationResult cr;
  try {
    cr = continuation_run(family, schedule, Eigen::VectorXd::Zero(n + 1), newton, jac);
  } catch (const ContinuationStall& e) {
    std::ostringstream msg;
    msg << "final-state continuation stalled at lambda = " << e.last_lambda() << ": " << e.what();
    throw ContinuationStall(msg.str(), e.last_lambda(), e.last_solution().cwiseProduct(sh.scale));
  }
  // polish at lambda = 1 to report the final residual
  const ScaledShooting s1 = at(1.0);
  const auto nr = newton_solve([&](const Eigen::VectorXd& w) { return s1.residual(w); }, cr.solution, newton,
                               [&](const Eigen::VectorXd& w, const Eigen::VectorXd&) { return s1.jacobian(w); });
  TransferSolution sol = finish(p, s1, nr.x, nr);
  sol.continuation_steps = cr.steps;
  sol.refinements = cr.refinements;
  sol.iterations = cr.newton_iterations + nr.iterations;
  return sol;
}

}  // namespace lowthrust
