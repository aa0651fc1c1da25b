#pragma once

#include <span>
#include <vector>

#include "dmamiso/dma.hpp"
#include "dmamiso/lorentzian_qp.hpp"
#include "dmamiso/scenario.hpp"

namespace dmamiso {

/// Fixed data of a downlink design problem.
struct DownlinkContext {
  std::vector<CMat> blocks;  // per-user composite (or realised) channel, N x m_k
  std::vector<CMat> grams;   // blocks[k] * blocks[k]^H
  double noise = 0;          // N_k
  double pmax = 0;
};

DownlinkContext make_downlink_context(std::span<const CMat> blocks, double noise, double pmax);

/// Fractional-programming auxiliaries: rho_k (SINR) and gamma_k.
struct FpAux {
  RVec rho;
  std::vector<CVec> gamma;
};

/// Optimal (rho, Gamma) for the beams V (N x K), computed jointly.
FpAux fp_auxiliaries(const DownlinkContext& ctx, const CMat& beams);

/// sum_k ln(1+rho_k) - rho_k + (1+rho_k) C_k(V, gamma_k), in nats.
double fp_objective(const DownlinkContext& ctx, const CMat& beams, const FpAux& aux);

/// Omega = sum_i (1 + rho_i) |gamma_i|^2 G_i G_i^H.
CMat fp_curvature(const DownlinkContext& ctx, const FpAux& aux);

struct PowerSolution {
  CMat x;
  double lambda = 0;
  int iterations = 0;
};

/// min sum_k x_k^H Psi x_k - 2 Re(x_k^H phi_k)  s.t.  sum_k ||x_k||^2 <= pmax.
/// One multiplier shared by all columns; bisection on the slackness
/// equation when the unconstrained solution is infeasible.
PowerSolution solve_power_constrained(const CMat& psi, const CMat& phi, double pmax);

struct PddState {
  DmaState dma;
  CMat precoder;  // W, L x K
  CMat beams;     // V, N x K
  FpAux aux;
  CMat dual;      // Xi, N x K
  double beta = 1e5;
  double violation = 1.0;  // h
  double threshold = 1.0;  // eta
  int outer = 0;
};

/// Augmented Lagrangian: fp_objective - (1/2beta) ||HQW - V + beta Xi||_F^2.
double al_objective(const DownlinkContext& ctx, const PddState& st);
/// ||HQW - V||_F^2.
double constraint_violation(const PddState& st);

/// Step 3: beams from the current auxiliaries, precoder, weights and dual.
PowerSolution update_beams(const DownlinkContext& ctx, const PddState& st);
/// Step 4: least-squares fit of HQW to V - beta Xi.
CMat update_precoder(const PddState& st, bool* ridged = nullptr);
/// Step 5: the penalty term as a quadratic in q (diagonal D).
QuadraticProblem assemble_downlink_quadratic(const PddState& st);

struct PddOptions {
  double beta0 = 1e5;
  double c1 = 0.5;
  double c2 = 1.0 / 6.0;
  double eps = 1e-5;
  double eta0 = 1.0;
  double inner_tol = 1e-4;
  int inner_max = 100;
  int outer_max = 200;
  double ewr_tol = 1e-6;
  int ewr_max_sweeps = 100;
};

PddOptions pdd_options(const SolverOptions& so);

struct PddResult {
  DmaState dma;
  CMat precoder;                     // rescaled to satisfy the power budget
  std::vector<double> surrogate_nats; // R_d surrogate after each outer iteration
  std::vector<double> violation;      // h after each outer iteration
  std::vector<int> inner_iterations;
  int outer_iterations = 0;
  bool converged = false;
  bool ridged = false;
  double max_block_drop = 0;  // largest relative AL decrease seen across block updates
  int dual_updates = 0;
  int penalty_updates = 0;
};

/// Initial beams: each user gets the dominant eigenvector of its Gram,
/// sharing pmax equally.
CMat initial_beams(const DownlinkContext& ctx);

/// Penalty dual decomposition double loop.
PddResult pdd_run(const DownlinkContext& ctx, const DmaState& start, const PddOptions& opt = {});

struct RelaxedResult {
  DmaState dma;
  CMat precoder;
  std::vector<double> objective;  // F_1 under the relaxed budget
  int iterations = 0;
  bool converged = false;
};

/// Alternating FP optimisation with the budget relaxed to ||W||_F^2 <= pmax,
/// followed by a rescale of W to meet ||HQW||_F^2 = pmax.
RelaxedResult relaxed_ao_run(const DownlinkContext& ctx, const DmaState& start, const PddOptions& opt = {});

/// Scales W so that ||HQW||_F^2 = pmax (when `only_shrink`, never scales up).
CMat rescale_precoder(const DmaState& dma, const CMat& precoder, double pmax, bool only_shrink);

double downlink_surrogate_nats(const DownlinkContext& ctx, const DmaState& dma, const CMat& precoder);

}  // namespace dmamiso
