#include "dmamiso/channel.hpp"

#include <cmath>
#include <sstream>

#include "dmamiso/linalg.hpp"

namespace dmamiso {

namespace {

// K0/(1+K0) and 1/(1+K0), with K0 = +inf meaning pure LoS.
double los_share(double k0) { return std::isinf(k0) ? 1.0 : k0 / (1.0 + k0); }
double nlos_share(double k0) { return 1.0 / (1.0 + k0); }

}  // namespace

CVec upa_steering(double azimuth, double elevation, const Scenario& sc) {
  const int s_count = sc.elements_per_strip;
  const int n = sc.num_elements();
  const double k = 2.0 * kPi / sc.wavelength;
  const double ux = std::sin(elevation) * std::cos(azimuth);
  const double uz = std::cos(elevation);
  CVec a(n);
  for (int i = 0; i < n; ++i) {
    const double phase = k * (ux * (i % s_count) * sc.dx + uz * (i / s_count) * sc.dz);
    a(i) = std::polar(1.0, phase);
  }
  return a;
}

RMat exponential_correlation(int n, double r) {
  RMat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = std::pow(r, std::abs(i - j));
  return m;
}

CMat correlation(const Scenario& sc) {
  const int s_count = sc.elements_per_strip;
  const int l_count = sc.num_microstrips;
  const RMat rh = exponential_correlation(s_count, sc.corr_coeff);
  const RMat rv = exponential_correlation(l_count, sc.corr_coeff);
  CMat r(l_count * s_count, l_count * s_count);
  for (int l1 = 0; l1 < l_count; ++l1)
    for (int l2 = 0; l2 < l_count; ++l2)
      r.block(l1 * s_count, l2 * s_count, s_count, s_count) = (rv(l1, l2) * rh).cast<cplx>();
  return r;
}

std::pair<std::vector<UserStat>, StackedStat> stat_matrices(const std::vector<UserGeometry>& users,
                                                            const Scenario& sc) {
  const int n = sc.num_elements();
  const CMat corr = correlation(sc);
  const double min_ev = linalg::min_eigenvalue(corr);
  if (min_ev < -1e-10) {
    std::ostringstream os;
    os << "correlation matrix is not PSD (smallest eigenvalue " << min_ev << ")";
    throw ConfigError("r", os.str());
  }
  const CMat corr_sqrt = linalg::hermitian_sqrt(corr);

  std::vector<UserStat> stats;
  stats.reserve(users.size());
  StackedStat stacked;
  stacked.stacked.resize(n, static_cast<Eigen::Index>(users.size()) * (n + 1));
  for (std::size_t k = 0; k < users.size(); ++k) {
    UserStat u;
    u.los = upa_steering(users[k].azimuth, users[k].elevation, sc);
    u.corr = corr;
    u.corr_sqrt = corr_sqrt;
    u.pathloss = users[k].pathloss;
    u.rician = sc.rician_factor;
    const double k0 = sc.rician_factor;
    u.composite.resize(n, n + 1);
    u.composite.col(0) = std::sqrt(u.pathloss * los_share(k0)) * u.los;
    u.composite.rightCols(n) = std::sqrt(u.pathloss * nlos_share(k0)) * corr_sqrt;
    u.gram = u.composite * u.composite.adjoint();
    stacked.stacked.middleCols(static_cast<Eigen::Index>(k) * (n + 1), n + 1) = u.composite;
    stats.push_back(std::move(u));
  }
  stacked.gram = stacked.stacked * stacked.stacked.adjoint();
  return {std::move(stats), std::move(stacked)};
}

CMat expected_covariance(const UserStat& u) {
  const double k0 = u.rician;
  return (u.pathloss * los_share(k0)) * (u.los * u.los.adjoint()) + (u.pathloss * nlos_share(k0)) * u.corr;
}

CVec sample_channel(const UserStat& u, RngStream& rng) {
  const Eigen::Index n = u.los.size();
  CVec white(n);
  for (Eigen::Index i = 0; i < n; ++i) white(i) = rng.complex_gaussian();
  const double k0 = u.rician;
  return std::sqrt(u.pathloss * los_share(k0)) * u.los + std::sqrt(u.pathloss * nlos_share(k0)) * (u.corr_sqrt * white);
}

std::vector<CMat> composite_blocks(std::span<const UserStat> stats) {
  std::vector<CMat> blocks;
  blocks.reserve(stats.size());
  for (const auto& u : stats) blocks.push_back(u.composite);
  return blocks;
}

}  // namespace dmamiso
