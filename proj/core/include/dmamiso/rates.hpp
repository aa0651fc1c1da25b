#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dmamiso/channel.hpp"
#include "dmamiso/dma.hpp"

namespace dmamiso {

enum class RateMode { Sic, Nsic, Downlink };
std::string to_string(RateMode mode);

struct RateReport {
  RateMode mode = RateMode::Sic;
  double surrogate_bits = 0;
  double mc_mean_bits = 0;
  double mc_se_bits = 0;
  int trials = 0;
  int dropped = 0;
  std::vector<double> per_user_bits;  // downlink MC mean per user
};

/// Diagonal of P = N0 (HQ)^H HQ, ridged by 1e-12 tr(P)/L when some entry
/// is numerically zero.
RVec noise_covariance_diag(const DmaState& dma, double noise, bool* ridged = nullptr);

// Closed-form rates in nats. Each takes per-user channel blocks: the
// composite statistical matrices for the surrogates, or single-column
// realised channels for the exact per-realisation rate.

/// log det(I + (HQ)^H sum_k B_k B_k^H HQ P^{-1}).
double sic_rate_nats(const DmaState& dma, std::span<const CMat> blocks, double noise);
/// sum_k log det(I + X_k (sum_{i!=k} X_i + P)^{-1}),  X_k = (HQ)^H B_k B_k^H HQ.
double nsic_rate_nats(const DmaState& dma, std::span<const CMat> blocks, double noise);
/// Per-user log(1 + ||B_k^H HQ w_k||^2 / (sum_{i!=k} ||B_k^H HQ w_i||^2 + N_k)).
RVec downlink_user_rates_nats(const DmaState& dma, const CMat& precoder, std::span<const CMat> blocks,
                              double noise);
double downlink_rate_nats(const DmaState& dma, const CMat& precoder, std::span<const CMat> blocks, double noise);

/// Closed-form surrogate (bound / approximation) in bits per channel use.
double surrogate_rate(RateMode mode, const DmaState& dma, const CMat* precoder, std::span<const UserStat> stats,
                      const Scenario& sc);

/// Monte-Carlo ergodic rate over `trials` draws from rng_stream(seed, t).
RateReport mc_rate(RateMode mode, const DmaState& dma, const CMat* precoder, std::span<const UserStat> stats,
                   const Scenario& sc, int trials, std::uint64_t seed);

/// Draws one realisation for every user from `rng` (users in order).
std::vector<CMat> sample_channels(std::span<const UserStat> stats, RngStream& rng);

enum class Architecture { FullDigital, Hybrid, Dma };
std::string to_string(Architecture arch);

/// Total consumed power in watts for the given architecture.
double total_power(Architecture arch, int num_elements, int num_rf_chains, double pmax, const PowerModel& pm);

/// Rate (bits/s/Hz) divided by total power.
double energy_efficiency(double rate_bits, Architecture arch, int num_elements, int num_rf_chains, double pmax,
                         const PowerModel& pm);

}  // namespace dmamiso
