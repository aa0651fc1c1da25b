#include "dmamiso/uplink.hpp"

#include <cmath>
#include <sstream>

#include "dmamiso/linalg.hpp"
#include "dmamiso/rates.hpp"

namespace dmamiso {

std::string to_string(Decoder d) { return d == Decoder::Sic ? "sic" : "nsic"; }

UplinkContext make_uplink_context(Decoder decoder, std::span<const CMat> blocks, double noise) {
  if (blocks.empty()) throw ConfigError("K", "at least one user block required");
  UplinkContext ctx;
  ctx.decoder = decoder;
  ctx.noise = noise;
  const Eigen::Index n = blocks.front().rows();
  ctx.a0 = noise * CMat::Identity(n, n);
  for (const auto& b : blocks) ctx.a0.noalias() += b * b.adjoint();
  if (decoder == Decoder::Sic) {
    Eigen::Index width = 0;
    for (const auto& b : blocks) width += b.cols();
    CMat g(n, width);
    Eigen::Index col = 0;
    for (const auto& b : blocks) {
      g.middleCols(col, b.cols()) = b;
      col += b.cols();
    }
    ctx.groups.push_back(std::move(g));
  } else {
    ctx.groups.assign(blocks.begin(), blocks.end());
  }
  return ctx;
}

std::vector<CMat> mmse_receivers(const UplinkContext& ctx, const DmaState& dma, bool* ridged) {
  const CMat hq = dma.hq();
  const CMat a = hq.adjoint() * ctx.a0 * hq;
  std::vector<CMat> u;
  u.reserve(ctx.groups.size());
  bool any = false;
  for (const auto& g : ctx.groups) {
    bool r = false;
    u.push_back(linalg::solve_hpd(a, hq.adjoint() * g, &r));
    any = any || r;
  }
  if (ridged) *ridged = any;
  return u;
}

std::vector<CMat> mse_matrices(const UplinkContext& ctx, const DmaState& dma, std::span<const CMat> receivers) {
  const CMat hq = dma.hq();
  const CMat a = hq.adjoint() * ctx.a0 * hq;
  std::vector<CMat> e;
  e.reserve(ctx.groups.size());
  for (std::size_t g = 0; g < ctx.groups.size(); ++g) {
    const CMat t = hq.adjoint() * ctx.groups[g];
    const CMat& u = receivers[g];
    const CMat cross = u.adjoint() * t;
    CMat eg = u.adjoint() * a * u - cross - cross.adjoint();
    eg.diagonal().array() += 1.0;
    e.push_back(0.5 * (eg + eg.adjoint()));
  }
  return e;
}

ReceiverWeights update_receiver_and_weight(const UplinkContext& ctx, const DmaState& dma) {
  ReceiverWeights rw;
  rw.receivers = mmse_receivers(ctx, dma, &rw.ridged);
  rw.mse = mse_matrices(ctx, dma, rw.receivers);
  // At the MMSE receiver E = I - T^H A^{-1} T, so with B = A - T T^H:
  // E^{-1} = I + T^H B^{-1} T and log det E^{-1} = log det A - log det B.
  const CMat hq = dma.hq();
  const CMat a = linalg::hermitian_part(hq.adjoint() * ctx.a0 * hq, 1e-6);
  const double logdet_a = linalg::logdet_hpd(a);
  for (const auto& g : ctx.groups) {
    const CMat t = hq.adjoint() * g;
    const CMat b = linalg::hermitian_part(a - t * t.adjoint(), 1e-6);
    bool r = false;
    const CMat bt = linalg::solve_hpd(b, t, &r);
    CMat w = t.adjoint() * bt;
    w.diagonal().array() += 1.0;
    rw.weights.push_back(0.5 * (w + w.adjoint()));
    rw.logdet_weights.push_back(logdet_a - linalg::logdet_hpd(b));
    rw.ridged = rw.ridged || r;
  }
  return rw;
}

double wmmse_objective(std::span<const CMat> weights, std::span<const CMat> mse) {
  double total = 0.0;
  for (std::size_t g = 0; g < weights.size(); ++g)
    total += weights[g].transpose().cwiseProduct(mse[g]).sum().real() - linalg::logdet_hpd(weights[g]);
  return total;
}

double wmmse_objective(const ReceiverWeights& rw) {
  double total = 0.0;
  for (std::size_t g = 0; g < rw.weights.size(); ++g)
    total += rw.weights[g].transpose().cwiseProduct(rw.mse[g]).sum().real() - rw.logdet_weights[g];
  return total;
}

UplinkQuadratic assemble_uplink_quadratic(const UplinkContext& ctx, const DmaState& dma, const ReceiverWeights& rw,
                                          QuadraticConvention conv) {
  const CMat ht = dma.propagation_blocks();
  const Eigen::Index n = ht.rows();
  CMat b = CMat::Zero(n, n);
  CVec diag_c = CVec::Zero(n);  // diag(C) with C = sum_g H~ U_g W_g G_g^H
  double constant = 0.0;
  for (std::size_t g = 0; g < ctx.groups.size(); ++g) {
    const CMat hu = ht * rw.receivers[g];                 // N x m
    const CMat huw = ht * (rw.receivers[g] * rw.weights[g]);  // N x m
    b.noalias() += huw * hu.adjoint();
    diag_c += huw.cwiseProduct(ctx.groups[g].conjugate()).rowwise().sum();
    constant += rw.weights[g].trace().real() - rw.logdet_weights[g];
  }
  b = 0.5 * (b + b.adjoint());
  UplinkQuadratic out;
  out.constant = constant;
  out.problem.set = dma.constraint();
  if (conv == QuadraticConvention::Transposed) {
    out.problem.D = ctx.a0.cwiseProduct(b.transpose());
    out.problem.c = diag_c.conjugate();
  } else {
    out.problem.D = ctx.a0.cwiseProduct(b);
    out.problem.c = diag_c;
  }
  return out;
}

WmmseOptions wmmse_options(const SolverOptions& so) {
  return {so.wmmse_tol, so.wmmse_max_iter, so.ewr_tol, so.ewr_max_sweeps};
}

double uplink_surrogate_nats(Decoder decoder, const DmaState& dma, std::span<const CMat> blocks, double noise) {
  return decoder == Decoder::Sic ? sic_rate_nats(dma, blocks, noise) : nsic_rate_nats(dma, blocks, noise);
}

UplinkResult wmmse_run(Decoder decoder, std::span<const CMat> blocks, double noise, const DmaState& start,
                       const WmmseOptions& opt) {
  const UplinkContext ctx = make_uplink_context(decoder, blocks, noise);
  UplinkResult res;
  res.dma = start;
  res.surrogate_nats.push_back(uplink_surrogate_nats(decoder, start, blocks, noise));

  // Objective at the start, with receivers and weights at their optima.
  ReceiverWeights rw = update_receiver_and_weight(ctx, res.dma);
  double prev = wmmse_objective(rw);
  res.objective.push_back(prev);

  for (int it = 0; it < opt.max_iter; ++it) {
    if (it > 0) rw = update_receiver_and_weight(ctx, res.dma);
    res.ridged = res.ridged || rw.ridged;
    const double after_uw = wmmse_objective(rw);
    const UplinkQuadratic quad = assemble_uplink_quadratic(ctx, res.dma, rw);
    const EwrResult ewr = ewr_solve(quad.problem, res.dma.q(), opt.ewr_tol, opt.ewr_max_sweeps);
    res.dma = res.dma.with_weights(ewr.q);
    const double after_q = ewr.objective + quad.constant;

    const double scale = std::max(1.0, std::abs(prev));
    if (after_uw > prev + 1e-8 * scale || after_q > after_uw + 1e-8 * scale) {
      std::ostringstream os;
      os << "wmmse_run: objective increased at iteration " << it << " (" << prev << " -> " << after_uw << " -> "
         << after_q << ")";
      throw SolverError(os.str());
    }
    res.objective.push_back(after_q);
    res.surrogate_nats.push_back(uplink_surrogate_nats(decoder, res.dma, blocks, noise));
    res.iterations = it + 1;
    const double change = prev - after_q;
    prev = after_q;
    if (change <= opt.tol * std::max(std::abs(res.surrogate_nats.back()), 1e-12)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace dmamiso
