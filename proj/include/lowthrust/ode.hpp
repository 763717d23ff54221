#pragma once

// Adaptive DOP853 integration with dense output and event location.
//
// The integrator is templated on the Eigen vector size so that the small
// fixed-size systems used throughout (4, 6, 10, 14 and the variational
// systems) avoid heap traffic. Eigen::Dynamic works as well.

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "lowthrust/dop853_tableau.hpp"
#include "lowthrust/errors.hpp"

namespace lowthrust {

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;

struct Tolerance {
  double rel = 1e-12;
  double abs = 1e-12;
};

struct OdeOptions {
  Tolerance tol;
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 5'000'000;
  bool dense = true;  // keep interpolation data for every step
};

// One accepted step with its 7th-order continuous extension.
template <int N>
struct DenseSegment {
  double t_old = 0.0;
  double h = 0.0;
  Vec<N> y_old;
  std::array<Vec<N>, dop853::kInterpolatorPower> F;

  Vec<N> operator()(double t) const {
    const double x = (t - t_old) / h;
    Vec<N> y = Vec<N>::Zero(y_old.size());
    for (int i = 0; i < dop853::kInterpolatorPower; ++i) {
      y += F[dop853::kInterpolatorPower - 1 - i];
      y *= (i % 2 == 0) ? x : (1.0 - x);
    }
    return y + y_old;
  }
};

// Samples in integration order. direction = +1 for forward, -1 for backward.
template <int N>
class Trajectory {
 public:
  int direction = 1;
  std::vector<double> t;
  std::vector<Vec<N>> y;
  std::vector<DenseSegment<N>> segments;  // segments[i] spans t[i] .. t[i+1]
  std::vector<double> steps;              // accepted signed step sizes

  static constexpr int interpolation_order = 7;

  double t_start() const { return t.front(); }
  double t_end() const { return t.back(); }
  const Vec<N>& front() const { return y.front(); }
  const Vec<N>& back() const { return y.back(); }
  bool has_dense() const { return !segments.empty() || t.size() == 1; }
  double t_min() const { return std::min(t.front(), t.back()); }
  double t_max() const { return std::max(t.front(), t.back()); }

  // Dense evaluation at any time inside the propagated span.
  Vec<N> operator()(double tq) const {
    if (t.size() == 1) return y.front();
    if (segments.empty()) throw PreconditionError("trajectory has no dense output");
    const double eps = 1e-12 * std::max(1.0, std::abs(tq));
    if (tq < t_min() - eps || tq > t_max() + eps)
      throw PreconditionError("dense evaluation outside the propagated span");
    // index of the segment containing tq
    std::size_t lo = 0, hi = segments.size() - 1;
    if (direction > 0) {
      auto it = std::upper_bound(t.begin(), t.end(), tq);
      std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - t.begin() - 1));
      lo = std::min(k, hi);
    } else {
      auto it = std::upper_bound(t.begin(), t.end(), tq, [](double a, double b) { return a > b; });
      std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - t.begin() - 1));
      lo = std::min(k, hi);
    }
    if (tq == t[lo]) return y[lo];
    if (tq == t[lo + 1]) return y[lo + 1];
    return segments[lo](tq);
  }
};

// Event description. direction is the required sign of d(g)/dt in physical
// time (0 accepts both). count selects the k-th accepted crossing; accept is an
// optional filter applied to the crossing state.
template <int N>
struct EventSpec {
  std::function<double(const Vec<N>&)> g;
  int direction = 0;
  int count = 1;
  bool terminal = true;
  std::function<bool(const Vec<N>&)> accept;
};

template <int N>
struct EventHit {
  double t = 0.0;
  Vec<N> state;
  int event_index = 0;
};

namespace detail {

template <int N, class Field>
class Dop853Stepper {
 public:
  Dop853Stepper(Field& f, int n) : f_(f), n_(n) {
    for (auto& k : K_) k = Vec<N>::Zero(n);
  }

  // Single step from (t, y) with derivative fy. Writes y_new, f_new and
  // returns the scaled error norm.
  double step(double t, const Vec<N>& y, const Vec<N>& fy, double h, const Tolerance& tol, Vec<N>& y_new,
              Vec<N>& f_new) {
    using namespace dop853;
    K_[0] = fy;
    Vec<N> dy(n_);
    for (int s = 1; s < kStages; ++s) {
      dy.setZero();
      for (int j = 0; j < s; ++j)
        if (A[s][j] != 0.0) dy.noalias() += A[s][j] * K_[j];
      K_[s] = f_(t + C[s] * h, Vec<N>(y + h * dy));
    }
    dy.setZero();
    for (int j = 0; j < kStages; ++j)
      if (B[j] != 0.0) dy.noalias() += B[j] * K_[j];
    y_new = y + h * dy;
    f_new = f_(t + h, y_new);
    K_[kStages] = f_new;

    Vec<N> err5 = Vec<N>::Zero(n_), err3 = Vec<N>::Zero(n_);
    for (int j = 0; j <= kStages; ++j) {
      if (E5[j] != 0.0) err5.noalias() += E5[j] * K_[j];
      if (E3[j] != 0.0) err3.noalias() += E3[j] * K_[j];
    }
    double e5 = 0.0, e3 = 0.0;
    for (int i = 0; i < n_; ++i) {
      const double sc = tol.abs + std::max(std::abs(y[i]), std::abs(y_new[i])) * tol.rel;
      e5 += (err5[i] / sc) * (err5[i] / sc);
      e3 += (err3[i] / sc) * (err3[i] / sc);
    }
    if (e5 == 0.0 && e3 == 0.0) return 0.0;
    return std::abs(h) * e5 / std::sqrt((e5 + 0.01 * e3) * n_);
  }

  // Continuous extension of the last step (needs three extra evaluations).
  DenseSegment<N> dense(double t_old, const Vec<N>& y_old, const Vec<N>& y_new, const Vec<N>& f_new, double h) {
    using namespace dop853;
    Vec<N> dy(n_);
    for (int s = kStages + 1; s < kStagesExtended; ++s) {
      dy.setZero();
      for (int j = 0; j < s; ++j)
        if (A[s][j] != 0.0) dy.noalias() += A[s][j] * K_[j];
      K_[s] = f_(t_old + C[s] * h, Vec<N>(y_old + h * dy));
    }
    DenseSegment<N> seg;
    seg.t_old = t_old;
    seg.h = h;
    seg.y_old = y_old;
    const Vec<N> delta = y_new - y_old;
    seg.F[0] = delta;
    seg.F[1] = h * K_[0] - delta;
    seg.F[2] = 2.0 * delta - h * (f_new + K_[0]);
    for (int r = 0; r < 4; ++r) {
      Vec<N> acc = Vec<N>::Zero(n_);
      for (int j = 0; j < kStagesExtended; ++j)
        if (D[r][j] != 0.0) acc.noalias() += D[r][j] * K_[j];
      seg.F[3 + r] = h * acc;
    }
    return seg;
  }

 private:
  Field& f_;
  int n_;
  std::array<Vec<N>, dop853::kStagesExtended> K_;
};

inline double rms(const double* v, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += v[i] * v[i];
  return std::sqrt(s / n);
}

template <int N, class Field>
double initial_step(Field& f, double t0, const Vec<N>& y0, const Vec<N>& f0, double span, double max_step,
                    int direction, const Tolerance& tol) {
  const int n = static_cast<int>(y0.size());
  Vec<N> scale(n);
  for (int i = 0; i < n; ++i) scale[i] = tol.abs + std::abs(y0[i]) * tol.rel;
  Vec<N> a = y0.cwiseQuotient(scale), b = f0.cwiseQuotient(scale);
  const double d0 = rms(a.data(), n), d1 = rms(b.data(), n);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, span);
  const Vec<N> y1 = y0 + h0 * direction * f0;
  const Vec<N> f1 = f(t0 + h0 * direction, y1);
  Vec<N> c = (f1 - f0).cwiseQuotient(scale);
  const double d2 = rms(c.data(), n) / h0;
  double h1;
  if (d1 <= 1e-15 && d2 <= 1e-15)
    h1 = std::max(1e-6, h0 * 1e-3);
  else
    h1 = std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
  return std::min({100 * h0, h1, span, max_step});
}

template <class T>
int sgn(T v) {
  return (T(0) < v) - (v < T(0));
}

}  // namespace detail

// Observer called after every accepted step. Receives the step bounds and a
// callable returning the dense segment; returns true to stop integration.
template <int N>
using StepObserver =
    std::function<bool(double t_old, const Vec<N>& y_old, double t_new, const Vec<N>& y_new,
                       const std::function<const DenseSegment<N>&()>& segment)>;

// Core driver shared by propagate and the event routines.
template <int N, class Field>
Trajectory<N> integrate(Field&& field, const Vec<N>& x0, double t0, double t1, const OdeOptions& opt,
                        const StepObserver<N>& observer = nullptr) {
  constexpr double kSafety = 0.9, kMinFactor = 0.2, kMaxFactor = 10.0;
  constexpr double kExponent = -1.0 / 8.0;
  const int n = static_cast<int>(x0.size());
  Trajectory<N> traj;
  traj.direction = (t1 >= t0) ? 1 : -1;
  traj.t.push_back(t0);
  traj.y.push_back(x0);
  if (t1 == t0) return traj;
  if (!x0.allFinite()) throw PropagationFailure("non-finite initial state", t0);

  auto& f = field;
  detail::Dop853Stepper<N, std::remove_reference_t<Field>> stepper(f, n);
  const int dir = traj.direction;
  double t = t0;
  Vec<N> y = x0;
  Vec<N> fy = f(t, y);
  double h_abs = detail::initial_step<N>(f, t0, y, fy, std::abs(t1 - t0), opt.max_step, dir, opt.tol);
  Vec<N> y_new(n), f_new(n);
  long nsteps = 0;

  while (dir * (t1 - t) > 0) {
    if (++nsteps > opt.max_steps) throw PropagationFailure("maximum number of steps exceeded", t);
    const double min_step = 10.0 * std::abs(std::nextafter(t, dir * std::numeric_limits<double>::infinity()) - t);
    h_abs = std::clamp(h_abs, min_step, opt.max_step);
    bool rejected = false;
    double h = 0.0, t_new = t;
    for (;;) {
      if (h_abs < min_step)
        throw PropagationFailure("step size underflow at t = " + std::to_string(t), t);
      h = h_abs * dir;
      t_new = t + h;
      if (dir * (t_new - t1) > 0) t_new = t1;
      h = t_new - t;
      h_abs = std::abs(h);
      double err = 0.0;
      bool finite = true;
      try {
        err = stepper.step(t, y, fy, h, opt.tol, y_new, f_new);
        finite = std::isfinite(err) && y_new.allFinite();
      } catch (const SingularityError&) {
        finite = false;
      }
      if (!finite) {
        h_abs *= 0.25;
        rejected = true;
        continue;
      }
      if (err < 1.0) {
        double factor = (err == 0.0) ? kMaxFactor : std::min(kMaxFactor, kSafety * std::pow(err, kExponent));
        if (rejected) factor = std::min(1.0, factor);
        h_abs *= factor;
        break;
      }
      h_abs *= std::max(kMinFactor, kSafety * std::pow(err, kExponent));
      rejected = true;
    }

    std::optional<DenseSegment<N>> seg;
    auto get_segment = [&]() -> const DenseSegment<N>& {
      if (!seg) seg = stepper.dense(t, y, y_new, f_new, h);
      return *seg;
    };
    if (opt.dense) get_segment();
    bool stop = false;
    if (observer) stop = observer(t, y, t_new, y_new, get_segment);
    if (opt.dense) traj.segments.push_back(*seg);
    traj.steps.push_back(h);
    t = t_new;
    y = y_new;
    fy = f_new;
    traj.t.push_back(t);
    traj.y.push_back(y);
    if (stop) break;
  }
  return traj;
}

// Adaptive propagation from t0 to t1 (either order).
template <int N, class Field>
Trajectory<N> propagate(Field&& field, const Vec<N>& x0, double t0, double t1, const OdeOptions& opt = {}) {
  return integrate<N>(field, x0, t0, t1, opt);
}

// Endpoint only, without dense output.
template <int N, class Field>
Vec<N> flow(Field&& field, const Vec<N>& x0, double t0, double t1, const Tolerance& tol = {},
            std::vector<double>* steps = nullptr) {
  OdeOptions opt;
  opt.tol = tol;
  opt.dense = false;
  auto tr = integrate<N>(field, x0, t0, t1, opt);
  if (steps) *steps = std::move(tr.steps);
  return tr.back();
}

// Replays a recorded step sequence without error control. Used to build
// finite-difference Jacobians whose columns share the nominal discretization.
template <int N, class Field>
Vec<N> flow_fixed_steps(Field&& field, const Vec<N>& x0, double t0, double t1, const std::vector<double>& steps) {
  const int n = static_cast<int>(x0.size());
  detail::Dop853Stepper<N, std::remove_reference_t<Field>> stepper(field, n);
  Tolerance tol;
  double t = t0;
  Vec<N> y = x0, y_new(n), f_new(n);
  Vec<N> fy = field(t, y);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const double h = (i + 1 == steps.size()) ? (t1 - t) : steps[i];
    stepper.step(t, y, fy, h, tol, y_new, f_new);
    t += h;
    y = y_new;
    fy = f_new;
  }
  return y;
}

namespace detail {

template <int N>
double locate_root(const DenseSegment<N>& seg, const std::function<double(const Vec<N>&)>& g, double ta, double tb,
                   double ga, double gb) {
  if (ga == 0.0) return ta;
  if (gb == 0.0) return tb;
  double lo = std::min(ta, tb), hi = std::max(ta, tb);
  double glo = (lo == ta) ? ga : gb, ghi = (hi == ta) ? ga : gb;
  auto fn = [&](double s) { return g(seg(s)); };
  boost::uintmax_t iters = 200;
  auto r = boost::math::tools::toms748_solve(fn, lo, hi, glo, ghi, boost::math::tools::eps_tolerance<double>(52),
                                             iters);
  // pick the bracket end with the smaller residual
  const double g1 = std::abs(fn(r.first)), g2 = std::abs(fn(r.second));
  return g1 <= g2 ? r.first : r.second;
}

}  // namespace detail

// Propagates from t0 toward t_max while monitoring events. Crossings of every
// event are recorded in order; integration stops when a terminal event reaches
// its requested count. The returned trajectory ends at the stopping crossing.
template <int N, class Field>
std::pair<Trajectory<N>, std::vector<EventHit<N>>> propagate_events(Field&& field, const Vec<N>& x0, double t0,
                                                                     double t_max,
                                                                     const std::vector<EventSpec<N>>& events,
                                                                     const OdeOptions& opt = {}) {
  std::vector<EventHit<N>> hits;
  std::vector<int> counts(events.size(), 0);
  std::vector<double> g_prev(events.size());
  for (std::size_t k = 0; k < events.size(); ++k) g_prev[k] = events[k].g(x0);
  bool first_step = true;
  std::optional<EventHit<N>> stop_hit;
  const int dir = (t_max >= t0) ? 1 : -1;

  StepObserver<N> obs = [&](double ta, const Vec<N>& ya, double tb, const Vec<N>& yb,
                            const std::function<const DenseSegment<N>&()>& segment) {
    (void)ya;
    // collect crossings inside this step, in time order
    std::vector<EventHit<N>> local;
    for (std::size_t k = 0; k < events.size(); ++k) {
      const auto& ev = events[k];
      const double ga = g_prev[k];
      const double gb = ev.g(yb);
      g_prev[k] = gb;
      bool crossed = false;
      if (ga == 0.0 && first_step) {
        crossed = gb != 0.0;
      } else if (ga != 0.0) {
        crossed = (ga < 0.0 && gb >= 0.0) || (ga > 0.0 && gb <= 0.0);
      }
      if (!crossed) continue;
      // sign of dg/dt in physical time
      const int slope = detail::sgn(gb - ga) * dir;
      if (ev.direction != 0 && slope != ev.direction) continue;
      const auto& seg = segment();
      const double tr = detail::locate_root<N>(seg, ev.g, ta, tb, ga, gb);
      EventHit<N> hit{tr, (tr == tb) ? yb : seg(tr), static_cast<int>(k)};
      if (ev.accept && !ev.accept(hit.state)) continue;
      local.push_back(hit);
    }
    first_step = false;
    std::sort(local.begin(), local.end(),
              [dir](const EventHit<N>& a, const EventHit<N>& b) { return dir * (a.t - b.t) < 0; });
    for (auto& hit : local) {
      hits.push_back(hit);
      const auto& ev = events[hit.event_index];
      if (++counts[hit.event_index] >= ev.count && ev.terminal) {
        stop_hit = hit;
        return true;
      }
    }
    return false;
  };

  auto traj = integrate<N>(field, x0, t0, t_max, opt, obs);
  if (stop_hit) {
    // truncate the last step at the event time
    traj.t.back() = stop_hit->t;
    traj.y.back() = stop_hit->state;
    while (!hits.empty() && dir * (hits.back().t - stop_hit->t) > 0) hits.pop_back();
  }
  return {std::move(traj), std::move(hits)};
}

// k-th crossing of a single event. Throws NoEventError if not reached.
template <int N, class Field>
EventHit<N> propagate_to_event(Field&& field, const Vec<N>& x0, double t0, double t_max, EventSpec<N> event,
                               const OdeOptions& opt = {}) {
  event.terminal = true;
  OdeOptions o = opt;
  o.dense = false;
  auto [traj, hits] = propagate_events<N>(field, x0, t0, t_max, std::vector<EventSpec<N>>{event}, o);
  if (static_cast<int>(hits.size()) < event.count || hits.empty())
    throw NoEventError("event not reached before t = " + std::to_string(t_max));
  return hits.back();
}

}  // namespace lowthrust
