#include "dmamiso/linalg.hpp"

#include <cmath>
#include <sstream>

namespace dmamiso::linalg {

CMat hermitian_part(const CMat& m, double tol) {
  if (m.rows() != m.cols()) throw SolverError("hermitian_part: matrix is not square");
  const double scale = std::max(m.norm(), 1e-300);
  const double asym = (m - m.adjoint()).norm();
  if (asym > tol * scale) {
    std::ostringstream os;
    os << "matrix asymmetry " << asym / scale << " exceeds " << tol;
    throw SolverError(os.str());
  }
  return 0.5 * (m + m.adjoint());
}

double logdet_hpd(const CMat& m) {
  const CMat h = hermitian_part(m);
  Eigen::LLT<CMat> llt(h);
  if (llt.info() != Eigen::Success) throw SolverError("logdet: matrix is not positive definite");
  const auto& l = llt.matrixLLT();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) acc += std::log(l(i, i).real());
  return 2.0 * acc;
}

CMat hermitian_sqrt(const CMat& m, double neg_tol) {
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(m));
  if (es.info() != Eigen::Success) throw SolverError("hermitian_sqrt: eigensolver failed");
  RVec ev = es.eigenvalues();
  if (ev.size() > 0 && ev.minCoeff() < -neg_tol) {
    std::ostringstream os;
    os << "matrix is not PSD, smallest eigenvalue " << ev.minCoeff();
    throw SolverError(os.str());
  }
  ev = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

double min_eigenvalue(const CMat& m) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

namespace {

CMat ridged_copy(const CMat& m) {
  const double eps = 1e-12 * std::max(m.trace().real(), 1e-300) / static_cast<double>(m.rows());
  CMat r = m;
  r.diagonal().array() += eps;
  return r;
}

}  // namespace

CMat solve_hpd(const CMat& m, const CMat& rhs, bool* ridged) {
  const CMat h = 0.5 * (m + m.adjoint());
  Eigen::LLT<CMat> llt(h);
  if (llt.info() == Eigen::Success) {
    if (ridged) *ridged = false;
    return llt.solve(rhs);
  }
  if (ridged) *ridged = true;
  Eigen::LDLT<CMat> ldlt(ridged_copy(h));
  if (ldlt.info() != Eigen::Success) throw SolverError("solve_hpd: factorisation failed after ridge");
  return ldlt.solve(rhs);
}

CMat inverse_hpd(const CMat& m, bool* ridged) {
  return solve_hpd(m, CMat::Identity(m.rows(), m.cols()), ridged);
}

}  // namespace dmamiso::linalg
