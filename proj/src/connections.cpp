#include "lowthrust/connections.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lowthrust {

namespace {

struct SectionPoint {
  int fiber;
  double phase;
  Eigen::Vector2d yv;  // (y, vy)
};

std::vector<SectionPoint> grid_cut(const std::vector<ManifoldFiber>& fibers, Section sec, int k) {
  std::vector<SectionPoint> out;
  for (const auto& c : section_cut(fibers, sec, k))
    out.push_back({c.fiber, fibers[static_cast<std::size_t>(c.fiber)].phase, Eigen::Vector2d(c.state[1], c.state[3])});
  return out;
}

// Segments joining cuts of neighbouring fibers, closing the loop over the orbit.
struct Segment {
  SectionPoint a, b;
  double phase_b_unwrapped;
};

std::vector<Segment> polyline(const std::vector<SectionPoint>& pts, int n_fibers, double period) {
  std::vector<Segment> segs;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& a = pts[i];
    const auto& b = pts[(i + 1) % pts.size()];
    if (b.fiber != (a.fiber + 1) % n_fibers) continue;
    const double pb = (b.fiber == 0) ? period : b.phase;
    segs.push_back({a, b, pb});
  }
  return segs;
}

// Intersection parameters (s, t) in [0, 1]^2 of two segments, if any.
bool intersect(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2, const Eigen::Vector2d& q1,
               const Eigen::Vector2d& q2, double& s, double& t) {
  Eigen::Matrix2d m;
  m.col(0) = p2 - p1;
  m.col(1) = q1 - q2;
  const double det = m.determinant();
  if (std::abs(det) < 1e-300) return false;
  const Eigen::Vector2d st = m.inverse() * (q1 - p1);
  s = st[0];
  t = st[1];
  return s >= 0 && s <= 1 && t >= 0 && t <= 1;
}

Trajectory<Eigen::Dynamic> join_legs(const Trajectory<Eigen::Dynamic>& fwd, const Trajectory<Eigen::Dynamic>& bwd,
                                     double t_stable) {
  // bwd runs from 0 down to -t_stable; reverse it and shift by t_u + t_stable.
  Trajectory<Eigen::Dynamic> out = fwd;
  const double shift = fwd.t_end() + t_stable;
  const std::size_t n = bwd.t.size();
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t j = n - 1 - i;
    out.t.push_back(bwd.t[j] + shift);
    out.y.push_back(bwd.y[j]);
  }
  for (std::size_t i = bwd.segments.size(); i-- > 0;) {
    DenseSegment<Eigen::Dynamic> seg = bwd.segments[i];
    seg.t_old += shift;
    out.segments.push_back(std::move(seg));
    out.steps.push_back(-bwd.steps[i]);
  }
  return out;
}

double normal_velocity(double mu, double energy_value, const Eigen::VectorXd& s) {
  const double u = effective_potential(mu, s.head(2));
  const double v2 = 2 * (energy_value - u) - s[3] * s[3];
  return std::sqrt(std::max(0.0, v2));
}

}  // namespace

double count_windings(const SystemParams& p, const Trajectory<Eigen::Dynamic>& traj) {
  const double cx = 1.0 - p.mu;
  auto angle = [cx](const Eigen::VectorXd& s) { return std::atan2(s[1], s[0] - cx); };
  double total = 0.0;
  double prev = angle(traj.y.front());
  auto advance = [&](const Eigen::VectorXd& s) {
    const double a = angle(s);
    double d = a - prev;
    if (d > kPi) d -= 2 * kPi;
    if (d < -kPi) d += 2 * kPi;
    total += d;
    prev = a;
  };
  for (std::size_t i = 0; i + 1 < traj.t.size(); ++i) {
    if (!traj.segments.empty()) {
      for (int q = 1; q < 4; ++q) advance(traj(traj.t[i] + (traj.t[i + 1] - traj.t[i]) * q / 4.0));
    }
    advance(traj.y[i + 1]);
  }
  return total / (2 * kPi);
}

HeteroclinicOrbit find_heteroclinic(const SystemParams& p, const PeriodicOrbit& orbit1, const PeriodicOrbit& orbit2,
                                    const HeteroclinicOptions& opt) {
  if (orbit1.initial_state.size() != 4 || orbit2.initial_state.size() != 4)
    throw PreconditionError("heteroclinic search on the section requires planar orbits");
  if (std::abs(orbit1.energy - orbit2.energy) > 1e-9) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "orbits must share the same energy (" << orbit1.energy << " vs " << orbit2.energy << ")";
    throw PreconditionError(msg.str());
  }
  if ((orbit1.initial_state - orbit2.initial_state).norm() <= 1e-12 && std::abs(orbit1.period - orbit2.period) <= 1e-12)
    throw PreconditionError("departure and arrival orbits are identical");
  if (opt.n_grid < 2) throw PreconditionError("n_grid must be at least 2");
  if (!(opt.alpha > 0)) throw PreconditionError("alpha must be positive");

  FiberOptions fu;
  fu.horizon = opt.horizon;
  fu.section = opt.section;
  fu.stop_after = opt.crossing_unstable;
  fu.tol = opt.tol;
  fu.keep_trajectory = false;
  FiberOptions fs = fu;
  fs.stop_after = opt.crossing_stable;

  const ManifoldGenerator gu(p, orbit1, Stability::unstable, opt.tol);
  const ManifoldGenerator gs(p, orbit2, Stability::stable, opt.tol);
  const auto fib_u = globalize(p, orbit1, opt.n_grid, Stability::unstable, opt.branch_unstable, opt.alpha, fu,
                               opt.threads);
  const auto fib_s = globalize(p, orbit2, opt.n_grid, Stability::stable, opt.branch_stable, opt.alpha, fs,
                               opt.threads);
  const auto cut_u = grid_cut(fib_u, opt.section, opt.crossing_unstable);
  const auto cut_s = grid_cut(fib_s, opt.section, opt.crossing_stable);
  if (cut_u.empty() || cut_s.empty()) throw NoConnection("a manifold has no crossing with the section");

  // intersections of the two section curves, with interpolated phases
  struct Candidate {
    double phase_u, phase_s;
  };
  std::vector<Candidate> crossings;
  const auto seg_u = polyline(cut_u, opt.n_grid, orbit1.period);
  const auto seg_s = polyline(cut_s, opt.n_grid, orbit2.period);
  for (const auto& a : seg_u) {
    for (const auto& b : seg_s) {
      double s = 0, t = 0;
      if (!intersect(a.a.yv, a.b.yv, b.a.yv, b.b.yv, s, t)) continue;
      crossings.push_back({a.a.phase + s * (a.phase_b_unwrapped - a.a.phase),
                           b.a.phase + t * (b.phase_b_unwrapped - b.a.phase)});
    }
  }
  if (crossings.empty()) throw NoConnection("the manifold cuts do not intersect on the section");

  // best grid pair by section distance
  double best = std::numeric_limits<double>::infinity();
  std::size_t bi = 0, bj = 0;
  for (std::size_t i = 0; i < cut_u.size(); ++i) {
    for (std::size_t j = 0; j < cut_s.size(); ++j) {
      const double d = (cut_u[i].yv - cut_s[j].yv).norm();
      if (d < best) {
        best = d;
        bi = i;
        bj = j;
      }
    }
  }
  std::vector<Candidate> guesses{{cut_u[bi].phase, cut_s[bj].phase}};
  std::sort(crossings.begin(), crossings.end(), [&](const Candidate& a, const Candidate& b) {
    auto dist = [&](const Candidate& c) {
      return std::hypot(c.phase_u - guesses[0].phase_u, c.phase_s - guesses[0].phase_s);
    };
    return dist(a) < dist(b);
  });
  guesses.insert(guesses.end(), crossings.begin(), crossings.end());

  auto crossing_of = [&](const ManifoldGenerator& g, double phase, Branch br, const FiberOptions& fo, int k) {
    auto fb = g.fiber(phase, br, opt.alpha, fo);
    if (fb.failed) throw PropagationFailure(fb.failure, 0.0);
    if (static_cast<int>(fb.crossings.size()) < k) throw NoEventError("fiber misses the section crossing");
    return fb;
  };
  ResidualFn residual = [&](const Eigen::VectorXd& ph) {
    const auto a = crossing_of(gu, ph[0], opt.branch_unstable, fu, opt.crossing_unstable);
    const auto b = crossing_of(gs, ph[1], opt.branch_stable, fs, opt.crossing_stable);
    const auto& sa = a.crossings.back().state;
    const auto& sb = b.crossings.back().state;
    return Eigen::VectorXd(Eigen::Vector2d(sa[1] - sb[1], sa[3] - sb[3]));
  };

  NewtonResult nr;
  bool solved = false;
  std::string last_error;
  Eigen::VectorXd best_iterate;
  double best_norm = std::numeric_limits<double>::infinity();
  for (const auto& g : guesses) {
    try {
      nr = newton_solve(residual, Eigen::Vector2d(g.phase_u, g.phase_s), opt.newton);
      solved = true;
      break;
    } catch (const NonConvergence& e) {
      last_error = e.what();
      if (e.best_norm() < best_norm) {
        best_norm = e.best_norm();
        best_iterate = e.best_iterate();
      }
    }
  }
  if (!solved)
    throw NonConvergence("heteroclinic phase solve failed from every candidate: " + last_error, best_iterate,
                         best_norm);

  FiberOptions fu_full = fu, fs_full = fs;
  fu_full.keep_trajectory = fs_full.keep_trajectory = true;
  const auto leg_u = crossing_of(gu, nr.x[0], opt.branch_unstable, fu_full, opt.crossing_unstable);
  const auto leg_s = crossing_of(gs, nr.x[1], opt.branch_stable, fs_full, opt.crossing_stable);

  HeteroclinicOrbit h;
  h.departure_phase = leg_u.phase;
  h.arrival_phase = leg_s.phase;
  h.alpha = opt.alpha;
  h.departure_seed = leg_u.seed;
  h.arrival_seed = leg_s.seed;
  h.time_unstable = leg_u.crossings.back().t;
  h.time_stable = -leg_s.crossings.back().t;
  h.total_time = h.time_unstable + h.time_stable;
  h.junction_unstable = leg_u.crossings.back().state;
  h.junction_stable = leg_s.crossings.back().state;
  const double e = orbit1.energy;
  for (auto* j : {&h.junction_unstable, &h.junction_stable})
    (*j)[2] = std::copysign(normal_velocity(p.mu, e, *j), (*j)[2]);
  h.junction_mismatch = (h.junction_unstable - h.junction_stable).lpNorm<Eigen::Infinity>();
  h.grid_min_distance = best;
  h.grid_fiber_unstable = cut_u[bi].fiber;
  h.grid_fiber_stable = cut_s[bj].fiber;
  h.trajectory = join_legs(leg_u.trajectory, leg_s.trajectory, h.time_stable);
  h.windings = count_windings(p, h.trajectory);
  h.revolutions = static_cast<int>(std::floor(std::abs(h.windings)));
  h.iterations = nr.iterations;
  return h;
}

BridgePair closest_approach(const std::vector<CutPoint>& cut1, const std::vector<CutPoint>& cut2) {
  if (cut1.empty() || cut2.empty()) throw NoCandidates("closest approach needs two non-empty cuts");
  BridgePair b;
  double best = std::numeric_limits<double>::infinity();
  std::size_t bi = 0, bj = 0;
  for (std::size_t i = 0; i < cut1.size(); ++i) {
    for (std::size_t j = 0; j < cut2.size(); ++j) {
      const double d = (cut1[i].state - cut2[j].state).norm();
      if (d < best) {
        best = d;
        bi = i;
        bj = j;
      }
    }
  }
  b.point_1 = cut1[bi].state;
  b.point_2 = cut2[bj].state;
  b.gap = best;
  b.fiber_1 = cut1[bi].fiber;
  b.fiber_2 = cut2[bj].fiber;
  b.t_1 = cut1[bi].t;
  b.t_2 = cut2[bj].t;
  return b;
}

BridgePair closest_approach(const std::vector<ManifoldFiber>& fibers1, const std::vector<ManifoldFiber>& fibers2,
                            Section section, int k1, int k2) {
  return closest_approach(section_cut(fibers1, section, k1), section_cut(fibers2, section, k2));
}

}  // namespace lowthrust
