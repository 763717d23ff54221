#include "lowthrust/manifolds.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <type_traits>

#include "lowthrust/parallel.hpp"
#include "lowthrust/variational.hpp"

namespace lowthrust {

namespace {

double reduce_phase(double t, double period) {
  double r = std::fmod(t, period);
  if (r < 0) r += period;
  return r;
}

template <int N>
Trajectory<Eigen::Dynamic> to_dynamic(const Trajectory<N>& tr) {
  Trajectory<Eigen::Dynamic> out;
  out.direction = tr.direction;
  out.t = tr.t;
  out.steps = tr.steps;
  out.y.reserve(tr.y.size());
  for (const auto& v : tr.y) out.y.emplace_back(v);
  out.segments.reserve(tr.segments.size());
  for (const auto& s : tr.segments) {
    DenseSegment<Eigen::Dynamic> d;
    d.t_old = s.t_old;
    d.h = s.h;
    d.y_old = s.y_old;
    for (std::size_t i = 0; i < s.F.size(); ++i) d.F[i] = s.F[i];
    out.segments.push_back(std::move(d));
  }
  return out;
}

template <int D>
void propagate_fiber(const SystemParams& p, ManifoldFiber& fb, const FiberOptions& opt) {
  CrtbpField<D> field{p.mu};
  const double t_end = (fb.stability == Stability::unstable ? 1.0 : -1.0) * opt.horizon;
  OdeOptions o;
  o.tol = opt.tol;
  o.dense = opt.keep_trajectory;
  std::vector<EventSpec<D>> events;
  if (opt.section) {
    const double xs = section_x(p);
    const Section sec = *opt.section;
    EventSpec<D> ev;
    ev.g = [xs](const Vec<D>& s) { return s[0] - xs; };
    ev.count = opt.stop_after;
    ev.terminal = true;
    ev.accept = [sec](const Vec<D>& s) { return sec == Section::U2 ? s[1] < 0 : s[1] > 0; };
    events.push_back(std::move(ev));
  }
  auto [traj, hits] = propagate_events<D>(field, Vec<D>(fb.seed), 0.0, t_end, events, o);
  for (const auto& h : hits) fb.crossings.push_back({h.t, Eigen::VectorXd(h.state)});
  if (opt.keep_trajectory) {
    fb.trajectory = to_dynamic<D>(traj);
  } else {
    fb.trajectory.direction = traj.direction;
    fb.trajectory.t = {traj.t.front(), traj.t.back()};
    fb.trajectory.y = {traj.y.front(), traj.y.back()};
  }
}

}  // namespace

MonodromyMatrix monodromy(const SystemParams& p, const PeriodicOrbit& orbit, double phase, const Tolerance& tol) {
  if (!(orbit.period > 0)) throw PreconditionError("orbit period must be positive");
  MonodromyMatrix m;
  m.phase = reduce_phase(phase, orbit.period);
  m.base_point = orbit_state_at(p, orbit, m.phase, tol);
  m.matrix = flow_with_stm(p.mu, m.base_point, 0.0, orbit.period, tol).stm;
  return m;
}

ManifoldDirections manifold_directions(const Eigen::MatrixXd& M) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success) throw NotHyperbolic("eigen-decomposition of the monodromy matrix failed");
  const Eigen::VectorXcd ev = es.eigenvalues();
  int iu = -1;
  for (int i = 0; i < ev.size(); ++i) {
    const bool real = std::abs(ev[i].imag()) <= 1e-9 * std::max(1.0, std::abs(ev[i]));
    if (real && ev[i].real() > 1 + 1e-9 && (iu < 0 || ev[i].real() > ev[iu].real())) iu = i;
  }
  if (iu < 0) throw NotHyperbolic("monodromy matrix has no real eigenvalue above one");
  const double lu = ev[iu].real();
  int is = -1;
  for (int i = 0; i < ev.size(); ++i) {
    if (i == iu || std::abs(ev[i].imag()) > 1e-9 * std::max(1.0, std::abs(ev[i]))) continue;
    if (is < 0 || std::abs(ev[i].real() - 1 / lu) < std::abs(ev[is].real() - 1 / lu)) is = i;
  }
  if (is < 0) throw NotHyperbolic("monodromy matrix has no stable real eigenvalue");

  auto oriented = [&](int i) {
    Eigen::VectorXd v = es.eigenvectors().col(i).real();
    v.normalize();
    const double key = std::abs(v[0]) > 1e-12 ? v[0] : v[1];
    if (key < 0) v = -v;
    return v;
  };
  ManifoldDirections d;
  d.unstable = oriented(iu);
  d.stable = oriented(is);
  d.lambda_unstable = lu;
  d.lambda_stable = ev[is].real();
  d.eigenvalues = ev;
  return d;
}

double section_x(const SystemParams& p) { return 1.0 - p.mu; }

bool on_section_side(Section s, const Eigen::VectorXd& state) {
  return s == Section::U2 ? state[1] < 0 : state[1] > 0;
}

ManifoldGenerator::ManifoldGenerator(const SystemParams& p, const PeriodicOrbit& orbit, Stability stability,
                                     const Tolerance& tol)
    : params_(p), orbit_(orbit), stability_(stability), tol_(tol) {
  const auto m = monodromy(p, orbit, 0.0, tol);
  const auto dirs = manifold_directions(m.matrix);
  if (stability == Stability::unstable) {
    y0_ = dirs.unstable;
    lambda_ = dirs.lambda_unstable;
  } else {
    y0_ = dirs.stable;
    lambda_ = dirs.lambda_stable;
  }
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> ManifoldGenerator::point_and_direction(double phase) const {
  const double t = reduce_phase(phase, orbit_.period);
  if (t == 0.0) return {orbit_.initial_state, y0_};
  const auto fs = flow_with_stm(params_.mu, orbit_.initial_state, 0.0, t, tol_);
  Eigen::VectorXd d = fs.stm * y0_;
  d.normalize();
  return {fs.state, d};
}

Eigen::VectorXd ManifoldGenerator::seed(double phase, Branch branch, double alpha) const {
  const auto [x, d] = point_and_direction(phase);
  return x + branch_sign(branch) * alpha * d;
}

ManifoldFiber ManifoldGenerator::fiber(double phase, Branch branch, double alpha, const FiberOptions& opt) const {
  if (!(alpha > 0)) throw PreconditionError("alpha must be positive");
  if (!(opt.horizon > 0)) throw PreconditionError("fiber horizon must be positive");
  if (opt.stop_after < 1) throw PreconditionError("stop_after must be at least 1");
  ManifoldFiber fb;
  fb.phase = reduce_phase(phase, orbit_.period);
  std::tie(fb.origin, fb.direction) = point_and_direction(fb.phase);
  fb.seed = fb.origin + branch_sign(branch) * alpha * fb.direction;
  fb.stability = stability_;
  fb.branch = branch;
  fb.alpha = alpha;
  fb.section = opt.section;
  try {
    if (fb.seed.size() == 4)
      propagate_fiber<4>(params_, fb, opt);
    else
      propagate_fiber<6>(params_, fb, opt);
  } catch (const Error& e) {
    fb.failed = true;
    fb.failure = e.what();
  }
  return fb;
}

std::vector<ManifoldFiber> globalize(const SystemParams& p, const PeriodicOrbit& orbit, int n_points,
                                     Stability stability, Branch branch, double alpha, const FiberOptions& opt,
                                     unsigned threads) {
  if (n_points < 1) throw PreconditionError("n_points must be at least 1");
  if (!(alpha > 0)) throw PreconditionError("alpha must be positive");
  const ManifoldGenerator gen(p, orbit, stability, opt.tol);
  std::vector<ManifoldFiber> fibers(static_cast<std::size_t>(n_points));
  parallel_for(
      fibers.size(),
      [&](std::size_t k) { fibers[k] = gen.fiber(orbit.period * static_cast<double>(k) / n_points, branch, alpha, opt); },
      threads);
  return fibers;
}

std::vector<CutPoint> section_cut(const std::vector<ManifoldFiber>& fibers, Section section, int k) {
  if (k < 1) throw PreconditionError("crossing index must be at least 1");
  std::vector<CutPoint> out;
  for (std::size_t i = 0; i < fibers.size(); ++i) {
    const auto& fb = fibers[i];
    if (!fb.section || *fb.section != section)
      throw PreconditionError("fibers must be propagated with the requested section armed");
    if (static_cast<int>(fb.crossings.size()) < k) continue;
    const auto& c = fb.crossings[static_cast<std::size_t>(k - 1)];
    out.push_back({static_cast<int>(i), c.t, c.state});
  }
  return out;
}

}  // namespace lowthrust
