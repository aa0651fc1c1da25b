#pragma once

#include <span>
#include <string>
#include <vector>

#include "dmamiso/dma.hpp"
#include "dmamiso/lorentzian_qp.hpp"
#include "dmamiso/scenario.hpp"

namespace dmamiso {

enum class Decoder { Sic, Nsic };
std::string to_string(Decoder d);

/// How the Hadamard factor and linear term are oriented when the WMMSE
/// objective is rewritten as a quadratic in q. `Transposed` (D = A0 o B^T,
/// c = diag(C^H)) is the one that matches the objective; `Literal`
/// (D = A0 o B, c = diag(C)) is kept to demonstrate that it does not.
enum class QuadraticConvention { Transposed, Literal };

/// Fixed data of one uplink WMMSE problem. For SIC there is one stream
/// group holding every user's block side by side; for nSIC one group per user.
struct UplinkContext {
  Decoder decoder = Decoder::Sic;
  std::vector<CMat> groups;  // N x m_g
  CMat a0;                   // sum_k B_k B_k^H + N0 I
  double noise = 0;
};

UplinkContext make_uplink_context(Decoder decoder, std::span<const CMat> blocks, double noise);

/// Receivers U_g (L x m_g), MSE matrices E_g and weights W_g = E_g^{-1}.
struct ReceiverWeights {
  std::vector<CMat> receivers;
  std::vector<CMat> mse;
  std::vector<CMat> weights;
  std::vector<double> logdet_weights;
  bool ridged = false;
};

/// MMSE receivers (HQ)^H A0 HQ)^{-1} (HQ)^H G_g for the current weights.
std::vector<CMat> mmse_receivers(const UplinkContext& ctx, const DmaState& dma, bool* ridged = nullptr);

/// E_g = U^H A U - U^H T - T^H U + I with A = (HQ)^H A0 HQ, T = (HQ)^H G_g.
std::vector<CMat> mse_matrices(const UplinkContext& ctx, const DmaState& dma, std::span<const CMat> receivers);

/// Steps 1-2: MMSE receivers for the current Q, then W = E^{-1} (formed
/// through the low-rank identity, so only L x L systems are factorised).
ReceiverWeights update_receiver_and_weight(const UplinkContext& ctx, const DmaState& dma);

/// sum_g tr(W_g E_g) - log det W_g.
double wmmse_objective(std::span<const CMat> weights, std::span<const CMat> mse);
/// Same, reusing the cached log det W_g.
double wmmse_objective(const ReceiverWeights& rw);

struct UplinkQuadratic {
  QuadraticProblem problem;
  double constant = 0;  // objective = q^H D q - 2Re(q^H c) + constant
};

/// Step 3: the WMMSE objective as a quadratic in q with U and W fixed.
UplinkQuadratic assemble_uplink_quadratic(const UplinkContext& ctx, const DmaState& dma, const ReceiverWeights& rw,
                                          QuadraticConvention conv = QuadraticConvention::Transposed);

struct UplinkResult {
  DmaState dma;
  std::vector<double> surrogate_nats;  // surrogate rate after each iteration, [0] = start
  std::vector<double> objective;       // WMMSE objective after each iteration
  int iterations = 0;
  bool converged = false;
  bool ridged = false;
};

struct WmmseOptions {
  double tol = 1e-4;
  int max_iter = 200;
  double ewr_tol = 1e-6;
  int ewr_max_sweeps = 100;
};

WmmseOptions wmmse_options(const SolverOptions& so);

/// Alternates Steps 1-3 until the relative objective change falls below
/// `tol`. Throws SolverError if the objective rises by more than 1e-8.
UplinkResult wmmse_run(Decoder decoder, std::span<const CMat> blocks, double noise, const DmaState& start,
                       const WmmseOptions& opt = {});

/// Surrogate of the decoder (R_sic bound or R_nsic approximation), nats.
double uplink_surrogate_nats(Decoder decoder, const DmaState& dma, std::span<const CMat> blocks, double noise);

}  // namespace dmamiso
