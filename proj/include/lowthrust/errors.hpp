#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace lowthrust {

// Base class for all solver and model failures raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid input that violates a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// State too close to a primary for the vector field to be evaluated.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// Step size underflow or non-finite state during integration.
class PropagationFailure : public Error {
 public:
  PropagationFailure(const std::string& what, double last_good_time)
      : Error(what), last_good_time_(last_good_time) {}
  double last_good_time() const { return last_good_time_; }

 private:
  double last_good_time_;
};

// Event function was not crossed before the integration limit.
class NoEventError : public Error {
 public:
  using Error::Error;
};

// Newton iteration failed; carries the best iterate seen.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, Eigen::VectorXd best, double best_norm)
      : Error(what), best_(std::move(best)), best_norm_(best_norm) {}
  const Eigen::VectorXd& best_iterate() const { return best_; }
  double best_norm() const { return best_norm_; }

 private:
  Eigen::VectorXd best_;
  double best_norm_;
};

// Continuation could not advance past last_lambda even after refinement.
class ContinuationStall : public Error {
 public:
  ContinuationStall(const std::string& what, double last_lambda, Eigen::VectorXd last_solution)
      : Error(what), last_lambda_(last_lambda), last_solution_(std::move(last_solution)) {}
  double last_lambda() const { return last_lambda_; }
  const Eigen::VectorXd& last_solution() const { return last_solution_; }

 private:
  double last_lambda_;
  Eigen::VectorXd last_solution_;
};

// Monodromy matrix without a real eigenvalue above one.
class NotHyperbolic : public Error {
 public:
  using Error::Error;
};

// Manifold cuts do not intersect on the section.
class NoConnection : public Error {
 public:
  using Error::Error;
};

// Empty section cut where at least one point is required.
class NoCandidates : public Error {
 public:
  using Error::Error;
};

}  // namespace lowthrust
