#include "dmamiso/rates.hpp"

#include <cmath>

#include "dmamiso/linalg.hpp"

namespace dmamiso {

std::string to_string(RateMode mode) {
  switch (mode) {
    case RateMode::Sic: return "sic";
    case RateMode::Nsic: return "nsic";
    case RateMode::Downlink: return "downlink";
  }
  return "?";
}

std::string to_string(Architecture arch) {
  switch (arch) {
    case Architecture::FullDigital: return "FD";
    case Architecture::Hybrid: return "HB";
    case Architecture::Dma: return "DMA";
  }
  return "?";
}

RVec noise_covariance_diag(const DmaState& dma, double noise, bool* ridged) {
  RVec p = noise * dma.hq_gram_diag();
  const double tr = p.sum();
  const double eps = 1e-12 * std::max(tr, 1e-300) / static_cast<double>(p.size());
  const bool need = p.minCoeff() < eps;
  if (need) p.array() += eps;
  if (ridged) *ridged = need;
  return p;
}

namespace {

// (HQ)^H B_k for every block.
std::vector<CMat> projected_blocks(const CMat& hq, std::span<const CMat> blocks) {
  std::vector<CMat> z;
  z.reserve(blocks.size());
  for (const auto& b : blocks) z.push_back(hq.adjoint() * b);
  return z;
}

double sum_log(const RVec& d) { return d.array().log().sum(); }

}  // namespace

double sic_rate_nats(const DmaState& dma, std::span<const CMat> blocks, double noise) {
  const RVec p = noise_covariance_diag(dma, noise);
  const CMat hq = dma.hq();
  CMat a = p.cast<cplx>().asDiagonal();
  for (const auto& z : projected_blocks(hq, blocks)) a.noalias() += z * z.adjoint();
  return linalg::logdet_hpd(a) - sum_log(p);
}

double nsic_rate_nats(const DmaState& dma, std::span<const CMat> blocks, double noise) {
  const RVec p = noise_covariance_diag(dma, noise);
  const CMat hq = dma.hq();
  const auto z = projected_blocks(hq, blocks);
  std::vector<CMat> x;
  x.reserve(z.size());
  CMat a = p.cast<cplx>().asDiagonal();
  for (const auto& zk : z) {
    x.push_back(zk * zk.adjoint());
    a += x.back();
  }
  const double logdet_a = linalg::logdet_hpd(a);
  double total = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    CMat b = p.cast<cplx>().asDiagonal();
    for (std::size_t i = 0; i < x.size(); ++i)
      if (i != k) b += x[i];
    total += logdet_a - linalg::logdet_hpd(b);
  }
  return total;
}

RVec downlink_user_rates_nats(const DmaState& dma, const CMat& precoder, std::span<const CMat> blocks,
                              double noise) {
  const CMat beams = dma.hq() * precoder;  // N x K
  const Eigen::Index k_users = static_cast<Eigen::Index>(blocks.size());
  if (beams.cols() != k_users) throw SolverError("downlink rate: precoder has the wrong number of columns");
  RVec rates(k_users);
  for (Eigen::Index k = 0; k < k_users; ++k) {
    const CMat y = blocks[k].adjoint() * beams;  // m x K
    const RVec power = y.colwise().squaredNorm().transpose();
    const double signal = power(k);
    const double interference = power.sum() - signal;
    rates(k) = std::log1p(signal / (interference + noise));
  }
  return rates;
}

double downlink_rate_nats(const DmaState& dma, const CMat& precoder, std::span<const CMat> blocks, double noise) {
  return downlink_user_rates_nats(dma, precoder, blocks, noise).sum();
}

double surrogate_rate(RateMode mode, const DmaState& dma, const CMat* precoder, std::span<const UserStat> stats,
                      const Scenario& sc) {
  const auto blocks = composite_blocks(stats);
  switch (mode) {
    case RateMode::Sic: return nats_to_bits(sic_rate_nats(dma, blocks, sc.noise_bs));
    case RateMode::Nsic: return nats_to_bits(nsic_rate_nats(dma, blocks, sc.noise_bs));
    case RateMode::Downlink:
      if (!precoder) throw ConfigError("W", "downlink rate requires a precoder");
      return nats_to_bits(downlink_rate_nats(dma, *precoder, blocks, sc.noise_ue));
  }
  return 0.0;
}

std::vector<CMat> sample_channels(std::span<const UserStat> stats, RngStream& rng) {
  std::vector<CMat> out;
  out.reserve(stats.size());
  for (const auto& u : stats) out.emplace_back(sample_channel(u, rng));
  return out;
}

RateReport mc_rate(RateMode mode, const DmaState& dma, const CMat* precoder, std::span<const UserStat> stats,
                   const Scenario& sc, int trials, std::uint64_t seed) {
  if (trials < 1) throw ConfigError("trials", "must be >= 1");
  if (mode == RateMode::Downlink && !precoder) throw ConfigError("W", "downlink rate requires a precoder");
  RateReport rep;
  rep.mode = mode;
  rep.surrogate_bits = surrogate_rate(mode, dma, precoder, stats, sc);
  std::vector<double> samples;
  samples.reserve(trials);
  RVec per_user = RVec::Zero(static_cast<Eigen::Index>(stats.size()));
  for (int t = 0; t < trials; ++t) {
    RngStream rng(seed, static_cast<std::uint64_t>(t));
    const auto channels = sample_channels(stats, rng);
    double value = 0.0;
    RVec user_rates;
    try {
      switch (mode) {
        case RateMode::Sic: value = sic_rate_nats(dma, channels, sc.noise_bs); break;
        case RateMode::Nsic: value = nsic_rate_nats(dma, channels, sc.noise_bs); break;
        case RateMode::Downlink: {
          user_rates = downlink_user_rates_nats(dma, *precoder, channels, sc.noise_ue);
          value = user_rates.sum();
          break;
        }
      }
    } catch (const SolverError&) {
      ++rep.dropped;
      continue;
    }
    if (!std::isfinite(value)) {
      ++rep.dropped;
      continue;
    }
    if (user_rates.size() > 0) per_user += user_rates;
    samples.push_back(nats_to_bits(value));
  }
  rep.trials = static_cast<int>(samples.size());
  if (samples.empty()) throw SolverError("mc_rate: every trial was dropped");
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  rep.mc_mean_bits = mean;
  rep.mc_se_bits = samples.size() > 1
                       ? std::sqrt(var / static_cast<double>(samples.size() - 1) / static_cast<double>(samples.size()))
                       : 0.0;
  if (mode == RateMode::Downlink)
    for (Eigen::Index k = 0; k < per_user.size(); ++k)
      rep.per_user_bits.push_back(nats_to_bits(per_user(k) / static_cast<double>(rep.trials)));
  return rep;
}

double total_power(Architecture arch, int num_elements, int num_rf_chains, double pmax, const PowerModel& pm) {
  const double tx = pmax / pm.amp_efficiency;
  switch (arch) {
    case Architecture::FullDigital: return tx + num_elements * pm.p_rf + pm.p_bs;
    case Architecture::Hybrid: return tx + num_rf_chains * pm.p_rf + num_elements * pm.p_ps + pm.p_bs;
    case Architecture::Dma: return tx + num_rf_chains * pm.p_rf + pm.p_bs;
  }
  return 0.0;
}

double energy_efficiency(double rate_bits, Architecture arch, int num_elements, int num_rf_chains, double pmax,
                         const PowerModel& pm) {
  return rate_bits / total_power(arch, num_elements, num_rf_chains, pmax, pm);
}

}  // namespace dmamiso
