#pragma once

// State plus state-transition matrix integrated together.

#include <Eigen/Core>

#include "lowthrust/crtbp.hpp"
#include "lowthrust/ode.hpp"

namespace lowthrust {

template <int D>
struct StmField {
  static constexpr int N = D + D * D;
  double mu;

  Vec<N> operator()(double, const Vec<N>& y) const {
    constexpr int d = D / 2;
    Vec<N> out;
    const Vec<D> s = y.template head<D>();
    out.template head<D>() = crtbp_field<D>(mu, s);
    double g[9];
    crtbp_position_jacobian(mu, d, s.data(), g);
    Eigen::Map<const Eigen::Matrix<double, D, D>> phi(y.data() + D);
    Eigen::Map<Eigen::Matrix<double, D, D>> dphi(out.data() + D);
    // A = [[0, I], [G, Omega]] with Omega the Coriolis block
    dphi.template topRows<d>() = phi.template bottomRows<d>();
    for (int i = 0; i < d; ++i) {
      for (int c = 0; c < D; ++c) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) acc += g[i * d + j] * phi(j, c);
        if (i == 0) acc += 2.0 * phi(d + 1, c);
        if (i == 1) acc -= 2.0 * phi(d, c);
        dphi(d + i, c) = acc;
      }
    }
    return out;
  }

  static Vec<N> initial(const Vec<D>& s) {
    Vec<N> y;
    y.template head<D>() = s;
    Eigen::Map<Eigen::Matrix<double, D, D>>(y.data() + D).setIdentity();
    return y;
  }

  static Eigen::Matrix<double, D, D> stm(const Vec<N>& y) {
    return Eigen::Map<const Eigen::Matrix<double, D, D>>(y.data() + D);
  }
};

// Flow and state-transition matrix from t0 to t1 for a 4- or 6-state.
struct FlowWithStm {
  Eigen::VectorXd state;
  Eigen::MatrixXd stm;
};

FlowWithStm flow_with_stm(double mu, const Eigen::VectorXd& s, double t0, double t1, const Tolerance& tol = {});

}  // namespace lowthrust
