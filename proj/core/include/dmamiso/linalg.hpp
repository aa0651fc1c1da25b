#pragma once

#include "dmamiso/types.hpp"

namespace dmamiso::linalg {

/// (M + M^H) / 2. Throws if the relative asymmetry exceeds `tol`.
CMat hermitian_part(const CMat& m, double tol = 1e-8);

/// log det of a Hermitian positive definite matrix (natural log).
/// Symmetrises first; throws SolverError when the factorisation fails.
double logdet_hpd(const CMat& m);

/// Hermitian PSD square root via eigendecomposition. Eigenvalues below
/// -neg_tol are rejected, smaller negatives are clamped to zero.
CMat hermitian_sqrt(const CMat& m, double neg_tol = 1e-10);

double min_eigenvalue(const CMat& m);

/// Inverse of a Hermitian PD matrix. If the Cholesky factorisation fails a
/// ridge 1e-12 * tr(m) / dim is added and `ridged` is set.
CMat inverse_hpd(const CMat& m, bool* ridged = nullptr);

/// Solves m x = rhs for Hermitian PD m, same ridge rule as inverse_hpd.
CMat solve_hpd(const CMat& m, const CMat& rhs, bool* ridged = nullptr);

}  // namespace dmamiso::linalg
