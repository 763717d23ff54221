#include "lowthrust/variational.hpp"

namespace lowthrust {

FlowWithStm flow_with_stm(double mu, const Eigen::VectorXd& s, double t0, double t1, const Tolerance& tol) {
  if (s.size() == 4) {
    StmField<4> f{mu};
    auto y = flow<20>(f, StmField<4>::initial(s), t0, t1, tol);
    return {y.head<4>(), StmField<4>::stm(y)};
  }
  if (s.size() == 6) {
    StmField<6> f{mu};
    auto y = flow<42>(f, StmField<6>::initial(s), t0, t1, tol);
    return {y.head<6>(), StmField<6>::stm(y)};
  }
  throw PreconditionError("state must have 4 or 6 components");
}

}  // namespace lowthrust
