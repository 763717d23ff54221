#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace lowthrust {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
// Jacobian at x; fx is the residual already evaluated at x.
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd& x, const Eigen::VectorXd& fx)>;

struct NewtonOptions {
  double tol = 1e-10;        // on the infinity norm of the residual
  int max_iter = 50;
  int max_halvings = 30;
  double fd_rel_step = 1e-8;  // central-difference step = fd_rel_step * max(1, |x_i|)
  // Broyden rank-one updates between full Jacobian evaluations; a fresh
  // Jacobian is computed whenever an updated one fails to give a full step.
  bool broyden = false;
  // Extra full-Newton steps after convergence, kept only if they reduce the residual.
  int polish_steps = 0;
};

struct NewtonResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residual;
  double residual_norm = 0.0;  // infinity norm
  int iterations = 0;
  int jacobian_evaluations = 0;
  double condition_estimate = 0.0;  // of the last Jacobian
};

// Central finite-difference Jacobian.
Eigen::MatrixXd fd_jacobian(const ResidualFn& f, const Eigen::VectorXd& x, double rel_step = 1e-8);

// Damped Newton. Throws NonConvergence with the best iterate on failure.
NewtonResult newton_solve(const ResidualFn& f, const Eigen::VectorXd& x0, const NewtonOptions& opt = {},
                          const JacobianFn& jacobian = nullptr);

enum class Predictor { constant, linear };

struct ContinuationSchedule {
  std::vector<double> grid;  // strictly increasing, 0 .. 1
  int max_refinements = 30;  // halvings allowed for a single grid step
  double min_step = 1e-4;
  Predictor predictor = Predictor::linear;

  static ContinuationSchedule uniform(int steps, Predictor p = Predictor::linear);
  void validate() const;
};

// Residual of the problem indexed by lambda.
using FamilyFn = std::function<Eigen::VectorXd(double lambda, const Eigen::VectorXd& x)>;
using FamilyJacobianFn =
    std::function<Eigen::MatrixXd(double lambda, const Eigen::VectorXd& x, const Eigen::VectorXd& fx)>;

struct ContinuationResult {
  Eigen::VectorXd solution;
  std::vector<double> lambdas;  // solved values, starting with 0
  std::vector<Eigen::VectorXd> path;
  int steps = 0;        // successful continuation steps (excluding lambda = 0)
  int refinements = 0;  // step halvings
  int newton_iterations = 0;
};

// Runs the homotopy from lambda = 0 (solved by x_at_0) to lambda = 1. A solve
// rejected by accept (e.g. a jump to another solution branch) counts as a failure.
ContinuationResult continuation_run(const FamilyFn& family, const ContinuationSchedule& schedule,
                                    const Eigen::VectorXd& x_at_0, const NewtonOptions& opt = {},
                                    const FamilyJacobianFn& jacobian = nullptr,
                                    const std::function<void(double, const Eigen::VectorXd&)>& on_step = nullptr,
                                    const std::function<bool(double, const Eigen::VectorXd&)>& accept = nullptr);

}  // namespace lowthrust
