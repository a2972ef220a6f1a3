#pragma once

#include "flatness/types.hpp"

namespace flatness::lp {

/// min c'x  s.t.  A x = b,  x >= 0.
struct LinearProgram {
  MatrixXd A;
  VectorXd b;
  VectorXd c;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  double objective = 0.0;
  VectorXd x;
  VectorXd dual;  // y with A'y <= c at optimality, b'y = objective
  long pivots = 0;
};

/// Two-phase tableau simplex, Dantzig pricing with a switch to Bland's rule after a
/// run of degenerate pivots. Redundant equality rows are tolerated.
LpResult solve_dense(const LinearProgram& lp, double tol = 1e-10);

}  // namespace flatness::lp
