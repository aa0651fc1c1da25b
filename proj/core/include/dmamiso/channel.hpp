#pragma once

#include <span>
#include <vector>

#include "dmamiso/scenario.hpp"

namespace dmamiso {

/// Statistical CSI of one user.
struct UserStat {
  CVec los;            // unit-modulus steering vector
  CMat corr;           // NLoS correlation R_k (unit diagonal)
  CMat corr_sqrt;      // Hermitian square root of corr
  double pathloss = 0; // alpha_k
  double rician = 0;   // K0
  CMat composite;      // N x (N+1): [sqrt(a K0/(1+K0)) los, sqrt(a/(1+K0)) corr_sqrt]
  CMat gram;           // composite * composite^H = E{g g^H}
};

/// Horizontal stack of every user's composite matrix.
struct StackedStat {
  CMat stacked;  // N x K(N+1)
  CMat gram;     // stacked * stacked^H
};

/// Steering vector of the uniform planar array; element n = l*S + s
/// (zero-based) has phase 2pi/lambda (sin w cos p s dx + cos w l dz).
CVec upa_steering(double azimuth, double elevation, const Scenario& sc);

/// r^{|i-j|} exponential correlation of size n.
RMat exponential_correlation(int n, double r);

/// Kronecker correlation R = R_V (L x L) kron R_H (S x S).
CMat correlation(const Scenario& sc);

/// Builds per-user statistics and the stacked matrix.
std::pair<std::vector<UserStat>, StackedStat> stat_matrices(const std::vector<UserGeometry>& users,
                                                            const Scenario& sc);

/// E{g g^H} from the closed form, independent of the composite factor.
CMat expected_covariance(const UserStat& u);

/// Draws one Rician channel realisation.
CVec sample_channel(const UserStat& u, RngStream& rng);

/// Extracts the per-user composite blocks (the solvers' view of the CSI).
std::vector<CMat> composite_blocks(std::span<const UserStat> stats);

}  // namespace dmamiso
