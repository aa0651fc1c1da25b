#include "dmamiso/lorentzian_qp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dmamiso/dma.hpp"

namespace dmamiso {

void QuadraticProblem::validate() const {
  if (D.rows() != D.cols() || D.rows() != c.size()) throw SolverError("QuadraticProblem: dimension mismatch");
  const double scale = std::max(D.norm(), 1e-300);
  if ((D - D.adjoint()).norm() > 1e-10 * scale) throw SolverError("QuadraticProblem: D is not Hermitian");
  for (Eigen::Index i = 0; i < D.rows(); ++i)
    if (D(i, i).real() < -1e-12 * scale) throw SolverError("QuadraticProblem: negative diagonal in D");
}

double quad_objective(const QuadraticProblem& p, const CVec& q) {
  if (q.size() != p.size()) throw SolverError("quad_objective: dimension mismatch");
  const cplx quad = q.dot(p.D * q);  // q^H D q
  if (std::abs(quad.imag()) > 1e-9 * std::max(1.0, std::abs(quad)))
    throw SolverError("quad_objective: q^H D q has an imaginary residue");
  return quad.real() - 2.0 * q.dot(p.c).real();
}

namespace {

// c_n - sum_{m != n} D_nm q_m, given r = D q.
cplx offdiag_drive(const QuadraticProblem& p, const CVec& q, const CVec& r, Eigen::Index n) {
  return p.c(n) - (r(n) - p.D(n, n) * q(n));
}

cplx coordinate_minimiser(const QuadraticProblem& p, const CVec& q, const CVec& r, Eigen::Index n) {
  const double dnn = p.D(n, n).real();
  const cplx drive = offdiag_drive(p, q, r, n);
  switch (p.set) {
    case ConstraintSet::Lorentzian: {
      const cplx eta = drive - 0.5 * kJ * dnn;
      if (std::abs(eta) == 0.0) return q(n);
      return constraint_map(std::arg(eta));
    }
    case ConstraintSet::AmplitudeOnly: {
      const double b = drive.real();
      if (dnn > 0.0) return std::clamp(b / dnn, kAmplitudeMin, kAmplitudeMax);
      if (b > 0.0) return kAmplitudeMax;
      if (b < 0.0) return kAmplitudeMin;
      return q(n);
    }
    case ConstraintSet::BinaryAmplitude: {
      const double f_high = dnn * kBinaryHigh * kBinaryHigh - 2.0 * kBinaryHigh * drive.real();
      return f_high < 0.0 ? cplx(kBinaryHigh) : cplx(0.0);
    }
    case ConstraintSet::Unconstrained:
      return dnn > 0.0 ? drive / dnn : q(n);
  }
  return q(n);
}

}  // namespace

cplx ewr_step(const QuadraticProblem& p, const CVec& q, Eigen::Index n) {
  const CVec r = p.D * q;
  return coordinate_minimiser(p, q, r, n);
}

EwrResult ewr_solve(const QuadraticProblem& p, const CVec& q0, double tol, int max_sweeps) {
  p.validate();
  if (q0.size() != p.size()) throw SolverError("ewr_solve: dimension mismatch");
  for (Eigen::Index i = 0; i < q0.size(); ++i)
    if (!is_feasible(q0(i), p.set)) {
      std::ostringstream os;
      os << "ewr_solve: initial weight " << i << " is infeasible under " << to_string(p.set);
      throw SolverError(os.str());
    }

  EwrResult res;
  if (p.set == ConstraintSet::Unconstrained) {
    const double f0 = quad_objective(p, q0);
    res.q = uc_solve(p).q;
    res.objective = quad_objective(p, res.q);
    res.trace = {f0, res.objective};
    res.sweeps = 1;
    res.converged = true;
    return res;
  }

  CVec q = q0;
  CVec r = p.D * q;
  double f = quad_objective(p, q);
  res.trace.push_back(f);
  const double scale = std::max({1.0, p.D.cwiseAbs().maxCoeff(), p.c.cwiseAbs().maxCoeff()});
  const Eigen::Index n_el = q.size();

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const double f_start = f;
    for (Eigen::Index n = 0; n < n_el; ++n) {
      const cplx next = coordinate_minimiser(p, q, r, n);
      const cplx delta = next - q(n);
      if (delta == 0.0) continue;
      const double change = 2.0 * std::real(std::conj(delta) * (r(n) - p.c(n))) + p.D(n, n).real() * std::norm(delta);
      if (change > 1e-9 * scale) throw SolverError("ewr_solve: coordinate update increased the objective");
      r += p.D.col(n) * delta;
      q(n) = next;
      f += change;
    }
    f = quad_objective(p, q);  // resync accumulated rounding once per sweep
    r = p.D * q;
    res.trace.push_back(f);
    res.sweeps = sweep + 1;
    const double decrease = f_start - f;
    if (decrease <= tol * std::max(std::abs(f_start), 1e-300)) {
      res.converged = true;
      break;
    }
  }
  res.q = std::move(q);
  res.objective = f;
  return res;
}

UcResult uc_solve(const QuadraticProblem& p) {
  UcResult res;
  const Eigen::Index n = p.size();
  const CMat h = 0.5 * (p.D + p.D.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  const RVec& ev = es.eigenvalues();
  const double emax = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  res.indefinite = ev.minCoeff() < -1e-10 * emax;
  RVec shifted = ev;
  if (ev.cwiseAbs().minCoeff() <= 1e-12 * emax) {
    const double eps = 1e-12 * std::max(h.trace().real(), 1e-300) / static_cast<double>(n);
    shifted.array() += eps;
    res.ridged = true;
  }
  const CVec proj = es.eigenvectors().adjoint() * p.c;
  res.q = es.eigenvectors() * (proj.array() / shifted.array().cast<cplx>()).matrix();
  return res;
}

}  // namespace dmamiso
