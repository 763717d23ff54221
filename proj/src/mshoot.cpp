#include "lowthrust/mshoot.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace lowthrust {

double MissionStructure::total_time() const {
  double t = 0.0;
  for (double d : durations) t += d;
  return t;
}

void MissionStructure::validate() const {
  dimension_of_state(start.size());
  if (target.size() != start.size()) throw PreconditionError("mission target must match the start dimension");
  if (durations.empty()) throw PreconditionError("mission needs at least one leg");
  for (double d : durations)
    if (!(d > 0)) throw PreconditionError("leg durations must be positive");
  if (!(mass > 0)) throw PreconditionError("initial mass must be positive");
  if (!(epsilon > 0)) throw PreconditionError("thrust coefficient must be positive");
  if (!start.allFinite() || !target.allFinite()) throw PreconditionError("mission endpoints must be finite");
}

Eigen::VectorXd ShootingLayout::leg_initial(const MissionStructure& s, const Eigen::VectorXd& z, int leg) const {
  const Eigen::Index np = n + 1;
  if (leg == 0) return make_extremal(s.start, s.mass, z.segment(costate(0), n), z[costate(0) + n]);
  const Eigen::Index a = state(leg), c = costate(leg);
  return make_extremal(z.segment(a, n), z[a + n], z.segment(c, n), z[c + np - 1]);
}

namespace {

void check_z(const Eigen::VectorXd& z, const MissionStructure& s) {
  s.validate();
  if (z.size() != ShootingLayout::of(s).size())
    throw PreconditionError("multiple shooting vector does not match the mission structure");
}

// Rows of leg `leg` given its final extremal state (raw units).
void fill_leg_rows(const ShootingLayout& L, const MissionStructure& s, const Eigen::VectorXd& z, int leg,
                   const Eigen::VectorXd& final, Eigen::VectorXd& r) {
  const int n = L.n;
  const Eigen::Index row = static_cast<Eigen::Index>(leg) * (2 * n + 2);
  if (leg < L.nodes) {
    const Eigen::Index a = L.state(leg + 1), c = L.costate(leg + 1);
    r.segment(row, n + 1) = final.head(n + 1) - z.segment(a, n + 1);
    r.segment(row + n + 1, n + 1) = final.segment(n + 1, n + 1) - z.segment(c, n + 1);
  } else {
    r.segment(row, n) = final.head(n) - s.target;
    r[row + n] = final[2 * n + 1];
  }
}

Eigen::Index leg_rows(const ShootingLayout& L, int leg) { return leg < L.nodes ? 2 * L.n + 2 : L.n + 1; }

// Newton variables: Z with the costate blocks divided by the mission scale.
struct ScaledMission {
  const SystemParams& params;
  MissionStructure s;
  ExtremalOptions opt;
  ShootingLayout L;
  Eigen::VectorXd zscale;  // per-component scale of Z
  Eigen::VectorXd rscale;  // per-row scale of the residual

  ScaledMission(const SystemParams& p, const MissionStructure& st, const ExtremalOptions& o)
      : params(p), s(st), opt(o), L(ShootingLayout::of(st)) {
    const int n = L.n;
    const Eigen::VectorXd cs = mission_costate_scale(p, n, s.mass, s.epsilon);
    zscale = Eigen::VectorXd::Ones(L.size());
    for (int k = 0; k <= L.nodes; ++k) zscale.segment(L.costate(k), n + 1) = cs;
    for (int k = 1; k <= L.nodes; ++k) zscale[L.state(k) + n] = s.mass;
    rscale = Eigen::VectorXd::Ones(L.size());
    for (int leg = 0; leg <= L.nodes; ++leg) {
      const Eigen::Index row = static_cast<Eigen::Index>(leg) * (2 * n + 2);
      if (leg < L.nodes) {
        rscale[row + n] = s.mass;
        rscale.segment(row + n + 1, n + 1) = cs;
      } else {
        rscale[row + n] = cs[n];
      }
    }
  }

  Eigen::VectorXd to_z(const Eigen::VectorXd& w) const { return w.cwiseProduct(zscale); }
  Eigen::VectorXd to_w(const Eigen::VectorXd& z) const { return z.cwiseQuotient(zscale); }

  Eigen::VectorXd residual(const Eigen::VectorXd& w) const {
    return multishoot_residual(params, to_z(w), s, opt).cwiseQuotient(rscale);
  }

  // Block central differences: each leg depends on its own initial block and,
  // through the matching rows, on the next node with an identity block.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& w) const {
    const int n = L.n;
    const Eigen::Index N = L.size();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(N, N);
    const Eigen::VectorXd z = to_z(w);
    for (int leg = 0; leg <= L.nodes; ++leg) {
      const Eigen::Index row = static_cast<Eigen::Index>(leg) * (2 * n + 2);
      const Eigen::Index nr = leg_rows(L, leg);
      // columns of the leg's initial block
      const Eigen::Index c0 = leg == 0 ? L.costate(0) : L.state(leg);
      const Eigen::Index nc = leg == 0 ? n + 1 : 2 * n + 2;
      const Eigen::Index cc = L.costate(leg);
      const double hc = std::max(1e-6 * w.segment(cc, n + 1).lpNorm<Eigen::Infinity>(), 1e-11);
      std::vector<double> steps;
      extremal_flow(params, L.leg_initial(s, z, leg), s.durations[leg], s.epsilon, opt, &steps);
      auto rows_at = [&](const Eigen::VectorXd& wt) {
        const Eigen::VectorXd zt = to_z(wt);
        const Eigen::VectorXd fin =
            extremal_flow_steps(params, L.leg_initial(s, zt, leg), s.durations[leg], s.epsilon, steps);
        Eigen::VectorXd r = Eigen::VectorXd::Zero(N);
        fill_leg_rows(L, s, zt, leg, fin, r);
        return Eigen::VectorXd(r.segment(row, nr).cwiseQuotient(rscale.segment(row, nr)));
      };
      for (Eigen::Index j = c0; j < c0 + nc; ++j) {
        const double h = j >= cc ? hc : 1e-9;
        Eigen::VectorXd wp = w, wm = w;
        wp[j] += h;
        wm[j] -= h;
        J.block(row, j, nr, 1) = (rows_at(wp) - rows_at(wm)) / (2 * h);
      }
      if (leg < L.nodes) {
        J.block(row, L.state(leg + 1), n + 1, n + 1) -= Eigen::MatrixXd::Identity(n + 1, n + 1);
        J.block(row + n + 1, L.costate(leg + 1), n + 1, n + 1) -= Eigen::MatrixXd::Identity(n + 1, n + 1);
      }
    }
    return J;
  }
};

std::string leg_report(const SystemParams& p, const Eigen::VectorXd& z, const MissionStructure& s,
                       const ExtremalOptions& opt) {
  std::ostringstream msg;
  try {
    const auto ev = evaluate_multishoot(p, z, s, opt);
    const ShootingLayout L = ShootingLayout::of(s);
    msg << "; per-leg residual norms:";
    for (int leg = 0; leg <= L.nodes; ++leg) {
      const Eigen::Index row = static_cast<Eigen::Index>(leg) * (2 * L.n + 2);
      if (ev.leg_failed[leg])
        msg << " [" << leg << ": failed, " << ev.failures[leg] << "]";
      else
        msg << " [" << leg << ": " << ev.residual.segment(row, leg_rows(L, leg)).lpNorm<Eigen::Infinity>() << "]";
    }
  } catch (const Error& e) {
    msg << "; evaluation failed: " << e.what();
  }
  return msg.str();
}

}  // namespace

MultishootEvaluation evaluate_multishoot(const SystemParams& p, const Eigen::VectorXd& z, const MissionStructure& s,
                                         const ExtremalOptions& opt) {
  check_z(z, s);
  const ShootingLayout L = ShootingLayout::of(s);
  MultishootEvaluation ev;
  ev.residual = Eigen::VectorXd::Zero(L.size());
  for (int leg = 0; leg <= L.nodes; ++leg) {
    Eigen::VectorXd fin;
    std::string failure;
    try {
      fin = extremal_flow(p, L.leg_initial(s, z, leg), s.durations[leg], s.epsilon, opt);
    } catch (const Error& e) {
      failure = e.what();
    }
    const bool failed = fin.size() == 0 || !fin.allFinite();
    if (failed && failure.empty()) failure = "non-finite extremal state";
    ev.leg_failed.push_back(failed);
    ev.failures.push_back(failure);
    if (failed) {
      const Eigen::Index row = static_cast<Eigen::Index>(leg) * (2 * L.n + 2);
      ev.residual.segment(row, leg_rows(L, leg)).setConstant(std::numeric_limits<double>::quiet_NaN());
      ev.leg_finals.emplace_back();
    } else {
      fill_leg_rows(L, s, z, leg, fin, ev.residual);
      ev.leg_finals.push_back(fin);
    }
  }
  return ev;
}

Eigen::VectorXd multishoot_residual(const SystemParams& p, const Eigen::VectorXd& z, const MissionStructure& s,
                                    const ExtremalOptions& opt) {
  return evaluate_multishoot(p, z, s, opt).residual;
}

Eigen::MatrixXd multishoot_jacobian(const SystemParams& p, const Eigen::VectorXd& z, const MissionStructure& s,
                                    const ExtremalOptions& opt) {
  check_z(z, s);
  const ScaledMission sm(p, s, opt);
  return sm.rscale.asDiagonal() * sm.jacobian(sm.to_w(z)) * sm.zscale.cwiseInverse().asDiagonal();
}

InitialGuess assemble_initial_Z(const SystemParams& p, const Eigen::VectorXd& start, double mass,
                                const std::vector<MissionSegment>& segments, const ExtremalOptions& opt) {
  const int n = static_cast<int>(start.size());
  dimension_of_state(n);
  if (segments.empty()) throw PreconditionError("mission needs at least one segment");
  InitialGuess g;
  g.structure.start = start;
  g.structure.mass = mass;
  double eps = 0.0;
  for (const auto& seg : segments) {
    if (!seg.transfer) continue;
    if (eps == 0.0) eps = seg.transfer->epsilon;
    if (seg.transfer->epsilon != eps) throw PreconditionError("local transfers must share the same thrust");
  }
  if (eps == 0.0) throw PreconditionError("mission needs at least one controlled segment");
  g.structure.epsilon = eps;

  // (state, mass) and costate at the beginning of each leg
  std::vector<Eigen::VectorXd> states, costates;
  Eigen::VectorXd x = start;
  double m = mass;
  for (const auto& seg : segments) {
    if (seg.transfer) {
      const auto& t = *seg.transfer;
      if (t.initial.size() != extremal_size(n)) throw PreconditionError("transfer dimension does not match the mission");
      Eigen::VectorXd X(n + 1);
      X << t.initial.head(n), m;
      states.push_back(X);
      costates.push_back(t.costate0);
      g.structure.durations.push_back(t.duration);
      // carry the transfer's mass consumption over to the current mass
      x = t.final.head(n);
      m -= t.initial[n] - t.final[n];
    } else {
      if (!(seg.free_duration > 0) || seg.legs < 1) throw PreconditionError("free arcs need a positive duration");
      const double dt = seg.free_duration / seg.legs;
      for (int k = 0; k < seg.legs; ++k) {
        Eigen::VectorXd X(n + 1);
        X << x, m;
        states.push_back(X);
        costates.push_back(Eigen::VectorXd::Zero(n + 1));
        g.structure.durations.push_back(dt);
        x = crtbp_flow(p.mu, x, 0.0, dt, opt.tol);
      }
    }
  }
  g.structure.target = x;
  const ShootingLayout L = ShootingLayout::of(g.structure);
  g.z.resize(L.size());
  g.z.segment(L.costate(0), n + 1) = costates[0];
  for (int k = 1; k <= L.nodes; ++k) {
    g.z.segment(L.state(k), n + 1) = states[k];
    g.z.segment(L.costate(k), n + 1) = costates[k];
  }
  return g;
}

Eigen::VectorXd mission_costate_scale(const SystemParams& p, int n, double mass, double eps) {
  return costate_scale(p, n, mass, eps) * (mass / eps);
}

MissionCosts evaluate_costs(const SystemParams& p, const MissionStructure& s, const Eigen::VectorXd& z,
                            double thrust_newtons, const ExtremalOptions& opt) {
  check_z(z, s);
  const ShootingLayout L = ShootingLayout::of(s);
  MissionCosts c;
  const double h0 = hamiltonian(p, L.leg_initial(s, z, 0), s.epsilon);
  double mass_end = s.mass;
  for (int leg = 0; leg <= L.nodes; ++leg) {
    const Eigen::VectorXd e0 = L.leg_initial(s, z, leg);
    const ArcCosts a = arc_costs(p, e0, s.durations[leg], s.epsilon, thrust_newtons, opt);
    c.cost1 += a.cost1;
    c.cost2 += a.cost2;
    c.cost3 += a.cost3;
    c.max_control = std::max(c.max_control, a.max_control);
    c.hamiltonian_drift =
        std::max(c.hamiltonian_drift, std::abs(hamiltonian(p, e0, s.epsilon) - h0) + a.hamiltonian_drift);
    mass_end = e0[L.n] - a.fuel;
  }
  c.fuel = s.mass - mass_end;
  return c;
}

MissionSolution solve_mission(const SystemParams& p, const Eigen::VectorXd& z0, const MissionStructure& s,
                              double thrust_newtons, const MissionOptions& opt) {
  check_z(z0, s);
  if (!z0.allFinite()) throw PreconditionError("initial multiple shooting vector must be finite");
  const ScaledMission sm(p, s, opt.extremal);
  NewtonResult nr;
  try {
    nr = newton_solve([&](const Eigen::VectorXd& w) { return sm.residual(w); }, sm.to_w(z0), opt.newton,
                      [&](const Eigen::VectorXd& w, const Eigen::VectorXd&) { return sm.jacobian(w); });
  } catch (const NonConvergence& e) {
    const Eigen::VectorXd best = sm.to_z(e.best_iterate());
    throw NonConvergence(e.what() + leg_report(p, best, s, opt.extremal), best, e.best_norm());
  }
  MissionSolution sol;
  sol.structure = s;
  sol.z = sm.to_z(nr.x);
  sol.thrust_newtons = thrust_newtons;
  sol.residual_norm = multishoot_residual(p, sol.z, s, opt.extremal).lpNorm<Eigen::Infinity>();
  sol.iterations = nr.iterations;
  sol.condition_estimate = nr.condition_estimate;
  if (!(sol.residual_norm <= opt.residual_tol)) {
    std::ostringstream msg;
    msg << "multiple shooting residual " << sol.residual_norm << " above " << opt.residual_tol
        << leg_report(p, sol.z, s, opt.extremal);
    throw NonConvergence(msg.str(), sol.z, sol.residual_norm);
  }
  sol.costs = evaluate_costs(p, s, sol.z, thrust_newtons, opt.extremal);
  return sol;
}

MissionSolution thrust_continuation(const SystemParams& p, const MissionSolution& solution, double thrust_to,
                                    const ContinuationSchedule& schedule, const MissionOptions& opt,
                                    ThrustContinuationReport* report) {
  if (!(thrust_to > 0)) throw PreconditionError("target thrust must be positive");
  const double thrust_from = solution.thrust_newtons;
  if (report) *report = ThrustContinuationReport{{thrust_from}, 0, 0, 0};
  if (thrust_to == thrust_from) return solution;
  auto thrust_at = [&](double lam) { return (1 - lam) * thrust_from + lam * thrust_to; };
  auto at = [&](double lam) {
    MissionStructure s = solution.structure;
    s.epsilon = p.epsilon_for(thrust_at(lam));
    return ScaledMission(p, s, opt.extremal);
  };
  // unknowns in acceleration units are nearly invariant while the control is unsaturated
  const ScaledMission m0 = at(0.0);
  FamilyFn family = [&](double lam, const Eigen::VectorXd& w) { return at(lam).residual(w); };
  FamilyJacobianFn jac = [&](double lam, const Eigen::VectorXd& w, const Eigen::VectorXd&) {
    return at(lam).jacobian(w);
  };
  std::vector<double> solved;
  auto on_step = [&](double lam, const Eigen::VectorXd&) { solved.push_back(thrust_at(lam)); };
  ContinuationResult cr;
  try {
    cr = continuation_run(family, schedule, m0.to_w(solution.z), opt.newton, jac, on_step);
  } catch (const ContinuationStall& e) {
    std::ostringstream msg;
    msg << "thrust continuation stalled at " << thrust_at(e.last_lambda()) << " N: " << e.what();
    throw ContinuationStall(msg.str(), e.last_lambda(), at(e.last_lambda()).to_z(e.last_solution()));
  }
  MissionStructure s1 = solution.structure;
  s1.epsilon = p.epsilon_for(thrust_to);
  MissionSolution out = solve_mission(p, at(1.0).to_z(cr.solution), s1, thrust_to, opt);
  out.departure_phase = solution.departure_phase;
  out.arrival_phase = solution.arrival_phase;
  if (report) {
    report->thrusts.insert(report->thrusts.end(), solved.begin(), solved.end());
    report->steps = cr.steps;
    report->refinements = cr.refinements;
    report->newton_iterations = cr.newton_iterations + out.iterations;
  }
  return out;
}

Eigen::Vector2d transversality_residual(const SystemParams& p, const MissionSolution& solution,
                                        const ExtremalOptions& opt) {
  const MissionStructure& s = solution.structure;
  check_z(solution.z, s);
  const ShootingLayout L = ShootingLayout::of(s);
  const int n = L.n;
  const Eigen::VectorXd e0 = L.leg_initial(s, solution.z, 0);
  const Eigen::VectorXd ef =
      extremal_flow(p, L.leg_initial(s, solution.z, L.nodes), s.durations.back(), s.epsilon, opt);
  const Eigen::VectorXd f0 = vector_field(p, e0.head(n));
  const Eigen::VectorXd ff = vector_field(p, ef.head(n));
  return {e0.segment(n + 1, n).dot(f0), ef.segment(n + 1, n).dot(ff)};
}

namespace {

struct PhaseSearch {
  const SystemParams& p;
  const PeriodicOrbit& orbit1;
  const PeriodicOrbit& orbit2;
  const TerminalOptions& opt;
  TerminalReport& rep;

  // Re-solves with moved endpoints, warm-started from `from`; falls back to a
  // phase continuation through intermediate points when the direct solve fails.
  MissionSolution resolve(const MissionSolution& from, double dep, double arr, int depth = 0) const {
    MissionStructure s = from.structure;
    s.start = orbit_state_at(p, orbit1, dep, opt.mission.extremal.tol);
    s.target = orbit_state_at(p, orbit2, arr, opt.mission.extremal.tol);
    ++rep.probes;
    try {
      MissionSolution out = solve_mission(p, from.z, s, from.thrust_newtons, opt.mission);
      out.departure_phase = dep;
      out.arrival_phase = arr;
      return out;
    } catch (const NonConvergence&) {
      if (depth >= 4) throw;
    }
    const MissionSolution mid =
        resolve(from, 0.5 * (from.departure_phase + dep), 0.5 * (from.arrival_phase + arr), depth + 1);
    return resolve(mid, dep, arr, depth + 1);
  }

  double residual(const MissionSolution& s, int which) const {
    return transversality_residual(p, s, opt.mission.extremal)[which];
  }

  static double phase(const MissionSolution& s, int which) { return which == 0 ? s.departure_phase : s.arrival_phase; }

  MissionSolution moved(const MissionSolution& from, int which, double ph) const {
    return which == 0 ? resolve(from, ph, from.arrival_phase) : resolve(from, from.departure_phase, ph);
  }

  // One-dimensional search on the departure (0) or arrival (1) phase.
  MissionSolution search(const MissionSolution& current, int which) const {
    const double period = (which == 0 ? orbit1 : orbit2).period;
    const double step = opt.step_fraction * period;
    const double c0 = current.costs.cost1;
    const double r0 = residual(current, which);
    if (std::abs(r0) <= opt.tol) return current;

    // dJ/d(arrival phase) = rf and dJ/d(departure phase) = -r0
    const double slope = which == 0 ? -r0 : r0;
    const double dir = slope > 0 ? -1.0 : 1.0;
    MissionSolution prev = current;
    double r_prev = r0;
    MissionSolution next = moved(current, which, phase(current, which) + dir * step);
    const int max_steps = static_cast<int>(std::ceil(1.0 / opt.step_fraction));
    int k = 1;
    double r_next = residual(next, which);
    while ((r_next > 0) == (r_prev > 0) && std::abs(r_next) > opt.tol) {
      if (next.costs.cost1 > prev.costs.cost1) {
        rep.notes.push_back(which == 0 ? "departure sweep: cost increased before a sign change"
                                       : "arrival sweep: cost increased before a sign change");
        return prev;
      }
      if (++k > max_steps) {
        rep.notes.push_back(which == 0 ? "departure sweep: no sign change within one period"
                                       : "arrival sweep: no sign change within one period");
        return prev;
      }
      prev = std::move(next);
      r_prev = r_next;
      next = moved(prev, which, phase(prev, which) + dir * step);
      r_next = residual(next, which);
    }
    if (std::abs(r_next) <= opt.tol) return accept(next, c0);

    // bisection on [prev, next]
    MissionSolution a = std::move(prev), b = std::move(next);
    double ra = r_prev;
    MissionSolution best = std::abs(ra) <= std::abs(r_next) ? a : b;
    double r_best = std::min(std::abs(ra), std::abs(r_next));
    while (std::abs(phase(b, which) - phase(a, which)) > opt.phase_tol && r_best > opt.tol) {
      MissionSolution mid = moved(a, which, 0.5 * (phase(a, which) + phase(b, which)));
      const double rm = residual(mid, which);
      if (std::abs(rm) < r_best) {
        r_best = std::abs(rm);
        best = mid;
      }
      if ((rm > 0) == (ra > 0)) {
        a = std::move(mid);
        ra = rm;
      } else {
        b = std::move(mid);
      }
    }
    if (r_best > opt.tol)
      rep.notes.push_back(which == 0 ? "departure sweep: residual jumps across the bracketed sign change"
                                     : "arrival sweep: residual jumps across the bracketed sign change");
    return accept(best, c0);
  }

  MissionSolution accept(const MissionSolution& s, double cost_before) const {
    if (s.costs.cost1 > cost_before * (1.0 + 1e-9)) rep.cost_monotone = false;
    return s;
  }
};

}  // namespace

MissionSolution optimize_terminal_points(const SystemParams& p, const MissionSolution& solution,
                                         const PeriodicOrbit& orbit1, const PeriodicOrbit& orbit2,
                                         const TerminalOptions& opt, TerminalReport* report) {
  if (orbit1.initial_state.size() != solution.structure.n() || orbit2.initial_state.size() != solution.structure.n())
    throw PreconditionError("terminal orbits must match the mission dimension");
  if (!(opt.step_fraction > 0 && opt.step_fraction < 1)) throw PreconditionError("step fraction must be in (0, 1)");
  TerminalReport local;
  TerminalReport& rep = report ? *report : local;
  rep = TerminalReport{};
  rep.initial_residual = transversality_residual(p, solution, opt.mission.extremal);
  rep.initial_cost1 = solution.costs.cost1;
  PhaseSearch ps{p, orbit1, orbit2, opt, rep};
  MissionSolution cur = solution;
  Eigen::Vector2d r = rep.initial_residual;
  for (rep.rounds = 0; rep.rounds < opt.max_rounds; ++rep.rounds) {
    if (r.lpNorm<Eigen::Infinity>() <= opt.tol) break;
    cur = ps.search(cur, 1);
    cur = ps.search(cur, 0);
    const Eigen::Vector2d r_prev = r;
    r = transversality_residual(p, cur, opt.mission.extremal);
    if (r.lpNorm<Eigen::Infinity>() >= 0.9 * r_prev.lpNorm<Eigen::Infinity>()) {
      rep.notes.push_back("alternating sweeps stopped reducing the residual");
      ++rep.rounds;
      break;
    }
  }
  rep.final_residual = r;
  rep.converged = r.lpNorm<Eigen::Infinity>() <= opt.tol;
  return cur;
}

std::vector<MissionSample> mission_samples(const SystemParams& p, const MissionSolution& solution,
                                           int samples_per_leg, const ExtremalOptions& opt) {
  const MissionStructure& s = solution.structure;
  check_z(solution.z, s);
  if (samples_per_leg < 1) throw PreconditionError("need at least one sample per leg");
  const ShootingLayout L = ShootingLayout::of(s);
  std::vector<MissionSample> out;
  double t0 = 0.0;
  for (int leg = 0; leg <= L.nodes; ++leg) {
    const double T = s.durations[leg];
    const auto tr = extremal_trajectory(p, L.leg_initial(s, solution.z, leg), T, s.epsilon, opt);
    for (int i = 0; i <= samples_per_leg; ++i) {
      const double t = T * i / samples_per_leg;
      MissionSample m;
      m.t = t0 + t;
      m.leg = leg;
      m.extremal = tr(t);
      m.control = control_law(p, m.extremal, s.epsilon).u;
      m.hamiltonian = hamiltonian(p, m.extremal, s.epsilon);
      out.push_back(std::move(m));
    }
    t0 += T;
  }
  return out;
}

TurnpikeCheck turnpike_check(const std::vector<MissionSample>& samples, double total_time) {
  TurnpikeCheck c;
  for (const auto& m : samples) {
    const double u = m.control.norm();
    c.max_control = std::max(c.max_control, u);
    if (m.t >= 0.2 * total_time && m.t <= 0.8 * total_time) c.middle_max_control = std::max(c.middle_max_control, u);
  }
  c.ratio = c.max_control > 0 ? c.middle_max_control / c.max_control : 0.0;
  c.passed = c.ratio <= 0.01;
  return c;
}

}  // namespace lowthrust
