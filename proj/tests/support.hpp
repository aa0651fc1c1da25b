#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dmamiso/channel.hpp"
#include "dmamiso/dma.hpp"
#include "dmamiso/scenario.hpp"

namespace testutil {

using namespace dmamiso;

inline Scenario scenario(int l, int s, int k, double k0_db = 10.0, std::optional<double> pmax_dbm = 5.0,
                         std::uint64_t seed = 1) {
  RawConfig raw{{"L", std::to_string(l)}, {"S", std::to_string(s)}, {"K", std::to_string(k)},
                {"K0_db", std::to_string(k0_db)}, {"seed", std::to_string(seed)}};
  if (pmax_dbm) raw["Pmax_dbm"] = std::to_string(*pmax_dbm);
  return resolve_scenario(raw);
}

inline CMat random_matrix(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
  CMat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.complex_gaussian();
  return m;
}

inline CVec random_vector(Eigen::Index n, RngStream& rng) { return random_matrix(n, 1, rng).col(0); }

inline CMat random_psd(Eigen::Index n, RngStream& rng) {
  const CMat a = random_matrix(n, n, rng);
  return a * a.adjoint();
}

inline CVec random_lp(Eigen::Index n, RngStream& rng) {
  CVec q(n);
  for (Eigen::Index i = 0; i < n; ++i) q(i) = constraint_map(rng.uniform(0.0, 2.0 * kPi));
  return q;
}

struct Instance {
  Scenario sc;
  std::vector<UserStat> stats;
  std::vector<CMat> blocks;
  MicrostripModel model;
  DmaState dma;
};

inline Instance instance(const Scenario& sc) {
  Instance in;
  in.sc = sc;
  in.stats = stat_matrices(place_users(sc), sc).first;
  in.blocks = composite_blocks(in.stats);
  in.model = microstrip_propagation(sc);
  in.dma = assemble_views(initial_weights(sc), in.model, sc);
  return in;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace testutil
