#include "lowthrust/newton.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "lowthrust/errors.hpp"

namespace lowthrust {

namespace {

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

// Residual evaluation that maps solver failures to an infinite norm.
bool try_eval(const ResidualFn& f, const Eigen::VectorXd& x, Eigen::VectorXd& out) {
  try {
    out = f(x);
  } catch (const Error&) {
    return false;
  }
  return out.allFinite();
}

}  // namespace

Eigen::MatrixXd fd_jacobian(const ResidualFn& f, const Eigen::VectorXd& x, double rel_step) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd J;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = rel_step * std::max(1.0, std::abs(x[j]));
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Eigen::VectorXd fp = f(xp), fm = f(xm);
    if (J.size() == 0) J.resize(fp.size(), n);
    J.col(j) = (fp - fm) / (xp[j] - xm[j]);
  }
  return J;
}

NewtonResult newton_solve(const ResidualFn& f, const Eigen::VectorXd& x0, const NewtonOptions& opt,
                          const JacobianFn& jacobian) {
  NewtonResult res;
  Eigen::VectorXd x = x0, F;
  if (!try_eval(f, x, F)) throw NonConvergence("residual not finite at the initial point", x0, INFINITY);
  double norm_inf = inf_norm(F);
  Eigen::VectorXd best = x;
  double best_norm = norm_inf;

  auto compute_jacobian = [&](const Eigen::VectorXd& at, const Eigen::VectorXd& fat) {
    ++res.jacobian_evaluations;
    return jacobian ? jacobian(at, fat) : fd_jacobian(f, at, opt.fd_rel_step);
  };

  Eigen::MatrixXd J;
  bool fresh = false;
  int polish_left = opt.polish_steps;

  for (;;) {
    const bool converged = norm_inf <= opt.tol;
    if (converged && polish_left <= 0) break;
    if (res.iterations >= opt.max_iter) {
      if (converged) break;
      std::ostringstream msg;
      msg << "Newton: no convergence after " << opt.max_iter << " iterations, residual " << best_norm;
      throw NonConvergence(msg.str(), best, best_norm);
    }
    if (!opt.broyden || J.size() == 0) {
      J = compute_jacobian(x, F);
      fresh = true;
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(J);
      if (qr.rank() < J.cols()) {
        if (converged) break;
        if (opt.broyden && attempt == 0 && res.jacobian_evaluations > 0 && !fresh) {
          J = compute_jacobian(x, F);
          fresh = true;
          continue;
        }
        std::ostringstream msg;
        msg << "Newton: singular Jacobian (rank " << qr.rank() << " of " << J.cols() << ")";
        throw NonConvergence(msg.str(), best, best_norm);
      }
      const Eigen::VectorXd step = -qr.solve(F);
      const double f2 = F.squaredNorm();
      double lam = 1.0;
      Eigen::VectorXd xt, Ft;
      const int halvings = converged ? 0 : opt.max_halvings;
      for (int k = 0; k <= halvings; ++k, lam *= 0.5) {
        xt = x + lam * step;
        if (try_eval(f, xt, Ft) && Ft.squaredNorm() < f2) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        if (converged) break;
        if (opt.broyden && !fresh) {
          J = compute_jacobian(x, F);
          fresh = true;
          continue;
        }
        std::ostringstream msg;
        msg << "Newton: step rejected after " << opt.max_halvings << " halvings, residual " << best_norm;
        throw NonConvergence(msg.str(), best, best_norm);
      }
      if (opt.broyden) {
        const Eigen::VectorXd s = lam * step;
        J += ((Ft - F) - J * s) * s.transpose() / s.squaredNorm();
        fresh = false;
        // A damped step means the local model is poor; rebuild next time.
        if (lam < 1.0) J.resize(0, 0);
      }
      x = xt;
      F = Ft;
      norm_inf = inf_norm(F);
      ++res.iterations;
      if (norm_inf < best_norm) {
        best_norm = norm_inf;
        best = x;
      }
    }
    if (converged) {
      --polish_left;
      if (!accepted) break;
    }
  }
  res.x = x;
  res.residual = F;
  res.residual_norm = norm_inf;
  if (J.size() > 0 && J.rows() == J.cols()) {
    const double rc = J.partialPivLu().rcond();
    res.condition_estimate = rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
  }
  return res;
}

ContinuationSchedule ContinuationSchedule::uniform(int steps, Predictor p) {
  if (steps < 1) throw PreconditionError("continuation schedule needs at least one step");
  ContinuationSchedule s;
  s.predictor = p;
  s.grid.resize(steps + 1);
  for (int i = 0; i <= steps; ++i) s.grid[i] = static_cast<double>(i) / steps;
  return s;
}

void ContinuationSchedule::validate() const {
  if (grid.size() < 2 || grid.front() != 0.0 || grid.back() != 1.0)
    throw PreconditionError("continuation grid must start at 0 and end at 1");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw PreconditionError("continuation grid must be strictly increasing");
  if (max_refinements < 0 || !(min_step > 0)) throw PreconditionError("invalid continuation refinement settings");
}

ContinuationResult continuation_run(const FamilyFn& family, const ContinuationSchedule& schedule,
                                    const Eigen::VectorXd& x_at_0, const NewtonOptions& opt,
                                    const FamilyJacobianFn& jacobian,
                                    const std::function<void(double, const Eigen::VectorXd&)>& on_step,
                                    const std::function<bool(double, const Eigen::VectorXd&)>& accept) {
  schedule.validate();
  ContinuationResult out;
  out.lambdas.push_back(0.0);
  out.path.push_back(x_at_0);
  double lam = 0.0;
  Eigen::VectorXd x = x_at_0;

  for (std::size_t gi = 1; gi < schedule.grid.size(); ++gi) {
    const double goal = schedule.grid[gi];
    int halvings = 0;
    double trial = goal;
    while (lam < goal) {
      Eigen::VectorXd guess = x;
      if (schedule.predictor == Predictor::linear && out.path.size() >= 2) {
        const std::size_t k = out.path.size();
        const double dl = out.lambdas[k - 1] - out.lambdas[k - 2];
        if (dl > 0) guess = x + (trial - lam) / dl * (out.path[k - 1] - out.path[k - 2]);
      }
      const double tl = trial;
      ResidualFn f = [&family, tl](const Eigen::VectorXd& z) { return family(tl, z); };
      JacobianFn jf = nullptr;
      if (jacobian) jf = [&jacobian, tl](const Eigen::VectorXd& z, const Eigen::VectorXd& fz) {
        return jacobian(tl, z, fz);
      };
      bool ok = false;
      try {
        auto r = newton_solve(f, guess, opt, jf);
        out.newton_iterations += r.iterations;
        ok = !accept || accept(trial, r.x);
        if (ok) x = r.x;
      } catch (const Error&) {
        ok = false;
      }
      if (ok) {
        lam = trial;
        out.lambdas.push_back(lam);
        out.path.push_back(x);
        ++out.steps;
        if (on_step) on_step(lam, x);
        trial = goal;
        continue;
      }
      const double step = (trial - lam) * 0.5;
      ++halvings;
      ++out.refinements;
      if (halvings > schedule.max_refinements || step < schedule.min_step) {
        std::ostringstream msg;
        msg << "continuation stalled at lambda = " << lam << " (refinement exhausted)";
        throw ContinuationStall(msg.str(), lam, x);
      }
      trial = lam + step;
    }
  }
  out.solution = x;
  return out;
}

}  // namespace lowthrust
