#pragma once

#include <vector>

#include "dmamiso/types.hpp"

namespace dmamiso {

/// min_q  q^H D q - 2 Re(q^H c)  subject to per-element feasibility.
struct QuadraticProblem {
  CMat D;
  CVec c;
  ConstraintSet set = ConstraintSet::Lorentzian;

  Eigen::Index size() const { return c.size(); }
  /// Checks D Hermitian (1e-10 relative) with real nonnegative diagonal.
  void validate() const;
};

double quad_objective(const QuadraticProblem& p, const CVec& q);

/// Exact minimiser of the objective over element n with the others fixed.
cplx ewr_step(const QuadraticProblem& p, const CVec& q, Eigen::Index n);

struct EwrResult {
  CVec q;
  double objective = 0;
  int sweeps = 0;
  bool converged = false;
  std::vector<double> trace;  // objective after each sweep, trace[0] = start
};

/// Element-wise refinement: ascending coordinate sweeps until the relative
/// decrease over a sweep drops below `tol`. UC problems go to uc_solve.
EwrResult ewr_solve(const QuadraticProblem& p, const CVec& q0, double tol = 1e-6, int max_sweeps = 100);

struct UcResult {
  CVec q;
  bool indefinite = false;
  bool ridged = false;
};

/// Stationary point D q = c of the unconstrained problem.
UcResult uc_solve(const QuadraticProblem& p);

}  // namespace dmamiso
