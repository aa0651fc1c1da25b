#include "dmamiso/downlink.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dmamiso/linalg.hpp"
#include "dmamiso/rates.hpp"

namespace dmamiso {

DownlinkContext make_downlink_context(std::span<const CMat> blocks, double noise, double pmax) {
  if (blocks.empty()) throw ConfigError("K", "at least one user block required");
  if (!(noise > 0)) throw ConfigError("Nk_dbm", "downlink noise must be positive");
  if (!(pmax > 0)) throw ConfigError("Pmax_dbm", "power budget must be positive");
  DownlinkContext ctx;
  ctx.noise = noise;
  ctx.pmax = pmax;
  for (const auto& b : blocks) {
    ctx.blocks.push_back(b);
    ctx.grams.push_back(b * b.adjoint());
  }
  return ctx;
}

namespace {

// s(k, i) = ||G_k^H v_i||^2, plus G_k^H v_k for each k.
struct BeamPowers {
  RMat s;
  std::vector<CVec> own;
};

BeamPowers beam_powers(const DownlinkContext& ctx, const CMat& beams) {
  const auto k = static_cast<Eigen::Index>(ctx.blocks.size());
  BeamPowers bp{RMat(k, beams.cols()), {}};
  for (Eigen::Index u = 0; u < k; ++u) {
    const CMat y = ctx.blocks[u].adjoint() * beams;
    bp.s.row(u) = y.colwise().squaredNorm();
    bp.own.push_back(y.col(u));
  }
  return bp;
}

void check_beams(const DownlinkContext& ctx, const CMat& beams) {
  if (beams.cols() != static_cast<Eigen::Index>(ctx.blocks.size()) || beams.rows() != ctx.blocks.front().rows())
    throw ConfigError("K", "beam matrix shape does not match the channel blocks");
}

}  // namespace

FpAux fp_auxiliaries(const DownlinkContext& ctx, const CMat& beams) {
  check_beams(ctx, beams);
  const BeamPowers bp = beam_powers(ctx, beams);
  const auto k = bp.s.rows();
  FpAux aux;
  aux.rho.resize(k);
  for (Eigen::Index u = 0; u < k; ++u) {
    const double total = bp.s.row(u).sum() + ctx.noise;
    const double signal = bp.s(u, u);
    aux.rho(u) = signal / (total - signal);
    aux.gamma.push_back(bp.own[u] / total);
  }
  return aux;
}

double fp_objective(const DownlinkContext& ctx, const CMat& beams, const FpAux& aux) {
  check_beams(ctx, beams);
  const BeamPowers bp = beam_powers(ctx, beams);
  double total = 0.0;
  for (Eigen::Index u = 0; u < bp.s.rows(); ++u) {
    const CVec& g = aux.gamma[u];
    const double c = 2.0 * g.dot(bp.own[u]).real() - (bp.s.row(u).sum() + ctx.noise) * g.squaredNorm();
    total += std::log1p(aux.rho(u)) - aux.rho(u) + (1.0 + aux.rho(u)) * c;
  }
  return total;
}

CMat fp_curvature(const DownlinkContext& ctx, const FpAux& aux) {
  const Eigen::Index n = ctx.blocks.front().rows();
  CMat omega = CMat::Zero(n, n);
  for (std::size_t u = 0; u < ctx.grams.size(); ++u)
    omega += ((1.0 + aux.rho(u)) * aux.gamma[u].squaredNorm()) * ctx.grams[u];
  return omega;
}

PowerSolution solve_power_constrained(const CMat& psi, const CMat& phi, double pmax) {
  if (!(pmax > 0)) throw ConfigError("Pmax_dbm", "power budget must be positive");
  const CMat sym = linalg::hermitian_part(psi);
  Eigen::SelfAdjointEigenSolver<CMat> es(sym);
  if (es.info() != Eigen::Success) throw SolverError("solve_power_constrained: eigendecomposition failed");
  RVec lam = es.eigenvalues();
  const double top = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
  if (lam.minCoeff() < -1e-10 * top) throw SolverError("solve_power_constrained: Psi is not positive semidefinite");
  const double zero_tol = 1e-14 * top;
  for (Eigen::Index i = 0; i < lam.size(); ++i) lam(i) = std::max(lam(i), 0.0);

  const CMat& u = es.eigenvectors();
  const CMat uphi = u.adjoint() * phi;
  const RVec xdiag = uphi.rowwise().squaredNorm();  // diag(U^H Phi Phi^H U)

  auto power = [&](double l) {
    double p = 0.0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      const double d = lam(i) + l;
      if (d <= zero_tol) {
        if (xdiag(i) > 0) return std::numeric_limits<double>::infinity();
        continue;
      }
      p += xdiag(i) / (d * d);
    }
    return p;
  };
  auto assemble = [&](double l) {
    RVec inv(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      const double d = lam(i) + l;
      inv(i) = d <= zero_tol ? 0.0 : 1.0 / d;
    }
    return CMat(u * (inv.cast<cplx>().asDiagonal() * uphi));
  };

  PowerSolution out;
  const double g0 = power(0.0) - pmax;
  if (g0 <= 0) {
    out.x = assemble(0.0);
    return out;
  }
  double lo = 0.0;
  double hi = std::sqrt(xdiag.sum() / pmax);
  if (!(power(hi) - pmax <= 0)) {
    std::ostringstream os;
    os << "solve_power_constrained: bracket failure, g(0) = " << g0 << ", g(hi) = " << power(hi) - pmax;
    throw SolverError(os.str());
  }
  double mid = hi;
  for (int it = 0; it < 2000; ++it) {
    mid = 0.5 * (lo + hi);
    const double g = power(mid) - pmax;
    out.iterations = it + 1;
    if (std::abs(g) < 1e-9 * pmax) break;
    if (g > 0) lo = mid;
    else hi = mid;
    if (hi - lo <= 4 * std::numeric_limits<double>::epsilon() * hi) {
      mid = hi;
      break;
    }
  }
  out.lambda = mid;
  out.x = assemble(mid);
  return out;
}

double constraint_violation(const PddState& st) {
  return (st.dma.hq() * st.precoder - st.beams).squaredNorm();
}

double al_objective(const DownlinkContext& ctx, const PddState& st) {
  const double pen = (st.dma.hq() * st.precoder - st.beams + st.beta * st.dual).squaredNorm();
  return fp_objective(ctx, st.beams, st.aux) - pen / (2.0 * st.beta);
}

PowerSolution update_beams(const DownlinkContext& ctx, const PddState& st) {
  const double inv2b = 1.0 / (2.0 * st.beta);
  CMat psi = fp_curvature(ctx, st.aux);
  psi.diagonal().array() += inv2b;
  CMat phi = inv2b * (st.dma.hq() * st.precoder + st.beta * st.dual);
  for (std::size_t k = 0; k < ctx.blocks.size(); ++k)
    phi.col(k) += (1.0 + st.aux.rho(k)) * (ctx.blocks[k] * st.aux.gamma[k]);
  return solve_power_constrained(psi, phi, ctx.pmax);
}

CMat update_precoder(const PddState& st, bool* ridged) {
  RVec d = st.dma.hq_gram_diag();
  const double eps = 1e-12 * std::max(d.sum(), 1e-300) / static_cast<double>(d.size());
  const bool need = d.minCoeff() < eps;
  if (need) d.array() += eps;
  if (ridged) *ridged = need;
  const CMat rhs = st.dma.hq().adjoint() * (st.beams - st.beta * st.dual);
  return d.cwiseInverse().cast<cplx>().asDiagonal() * rhs;
}

QuadraticProblem assemble_downlink_quadratic(const PddState& st) {
  const CMat t = st.dma.propagation_blocks() * st.precoder;
  const CMat y = st.beams - st.beta * st.dual;
  QuadraticProblem p;
  p.set = st.dma.constraint();
  p.D = CMat::Zero(t.rows(), t.rows());
  p.D.diagonal() = t.rowwise().squaredNorm().cast<cplx>();
  p.c = y.cwiseProduct(t.conjugate()).rowwise().sum();
  return p;
}

PddOptions pdd_options(const SolverOptions& so) {
  PddOptions o;
  o.beta0 = so.pdd_beta0;
  o.c1 = so.pdd_c1;
  o.c2 = so.pdd_c2;
  o.eps = so.pdd_eps;
  o.eta0 = so.pdd_eta0;
  o.inner_tol = so.pdd_inner_tol;
  o.inner_max = so.pdd_inner_max;
  o.outer_max = so.pdd_outer_max;
  o.ewr_tol = so.ewr_tol;
  o.ewr_max_sweeps = so.ewr_max_sweeps;
  return o;
}

CMat initial_beams(const DownlinkContext& ctx) {
  const auto k = static_cast<Eigen::Index>(ctx.grams.size());
  const Eigen::Index n = ctx.grams.front().rows();
  CMat v(n, k);
  const double amp = std::sqrt(ctx.pmax / static_cast<double>(k));
  for (Eigen::Index u = 0; u < k; ++u) {
    Eigen::SelfAdjointEigenSolver<CMat> es(linalg::hermitian_part(ctx.grams[u]));
    if (es.info() != Eigen::Success) throw SolverError("initial_beams: eigendecomposition failed");
    v.col(u) = amp * es.eigenvectors().col(n - 1);
  }
  return v;
}

CMat rescale_precoder(const DmaState& dma, const CMat& precoder, double pmax, bool only_shrink) {
  const double used = (dma.hq() * precoder).squaredNorm();
  if (used <= 0) return precoder;
  double s = std::sqrt(pmax / used);
  if (only_shrink) s = std::min(1.0, s);
  return s * precoder;
}

double downlink_surrogate_nats(const DownlinkContext& ctx, const DmaState& dma, const CMat& precoder) {
  return downlink_rate_nats(dma, precoder, ctx.blocks, ctx.noise);
}

PddResult pdd_run(const DownlinkContext& ctx, const DmaState& start, const PddOptions& opt) {
  if (!(opt.beta0 > 0) || !(opt.c1 > 0 && opt.c1 < 1) || !(opt.c2 > 0 && opt.c2 < 1))
    throw ConfigError("pdd_beta0", "penalty parameters out of range");
  PddState st;
  st.dma = start;
  st.beta = opt.beta0;
  st.threshold = opt.eta0;
  st.beams = initial_beams(ctx);
  st.dual = CMat::Zero(st.beams.rows(), st.beams.cols());
  PddResult res;
  st.precoder = update_precoder(st, &res.ridged);
  st.aux = fp_auxiliaries(ctx, st.beams);

  auto track = [&](double before, double after) {
    const double drop = (before - after) / std::max(1.0, std::abs(before));
    res.max_block_drop = std::max(res.max_block_drop, drop);
  };

  for (int t = 0; t < opt.outer_max; ++t) {
    double prev = al_objective(ctx, st);
    int inner = 0;
    for (; inner < opt.inner_max;) {
      double cur = prev;
      st.aux = fp_auxiliaries(ctx, st.beams);
      double next = al_objective(ctx, st);
      track(cur, next);
      cur = next;

      st.beams = update_beams(ctx, st).x;
      next = al_objective(ctx, st);
      track(cur, next);
      cur = next;

      bool r = false;
      st.precoder = update_precoder(st, &r);
      res.ridged = res.ridged || r;
      next = al_objective(ctx, st);
      track(cur, next);
      cur = next;

      const QuadraticProblem quad = assemble_downlink_quadratic(st);
      const EwrResult ewr = ewr_solve(quad, st.dma.q(), opt.ewr_tol, opt.ewr_max_sweeps);
      st.dma = st.dma.with_weights(ewr.q);
      next = al_objective(ctx, st);
      track(cur, next);

      ++inner;
      const bool done = std::abs(next - prev) <= opt.inner_tol * std::max(std::abs(prev), 1e-12);
      prev = next;
      if (done) break;
    }
    res.inner_iterations.push_back(inner);

    const CMat gap = st.dma.hq() * st.precoder - st.beams;
    st.violation = gap.squaredNorm();
    if (st.violation < st.threshold) {
      st.dual += gap / st.beta;
      ++res.dual_updates;
    } else {
      st.beta *= opt.c1;
      ++res.penalty_updates;
    }
    st.threshold = opt.c2 * st.violation;
    st.outer = t + 1;
    res.violation.push_back(st.violation);
    res.surrogate_nats.push_back(downlink_surrogate_nats(ctx, st.dma, st.precoder));
    res.outer_iterations = t + 1;
    if (st.violation < opt.eps) {
      res.converged = true;
      break;
    }
  }
  res.dma = st.dma;
  res.precoder = rescale_precoder(st.dma, st.precoder, ctx.pmax, true);
  return res;
}

RelaxedResult relaxed_ao_run(const DownlinkContext& ctx, const DmaState& start, const PddOptions& opt) {
  RelaxedResult res;
  res.dma = start;
  {
    PddState init;
    init.dma = start;
    init.beta = 1.0;
    init.beams = initial_beams(ctx);
    init.dual = CMat::Zero(init.beams.rows(), init.beams.cols());
    CMat w = update_precoder(init);
    const double norm = w.squaredNorm();
    res.precoder = norm > 0 ? CMat(w * std::sqrt(ctx.pmax / norm)) : w;
  }

  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.outer_max; ++it) {
    CMat hq = res.dma.hq();
    const FpAux aux = fp_auxiliaries(ctx, hq * res.precoder);
    const CMat omega = fp_curvature(ctx, aux);

    CMat phi(hq.cols(), res.precoder.cols());
    for (std::size_t k = 0; k < ctx.blocks.size(); ++k)
      phi.col(k) = (1.0 + aux.rho(k)) * (hq.adjoint() * (ctx.blocks[k] * aux.gamma[k]));
    res.precoder = solve_power_constrained(hq.adjoint() * omega * hq, phi, ctx.pmax).x;

    const CMat t = res.dma.propagation_blocks() * res.precoder;
    QuadraticProblem quad;
    quad.set = res.dma.constraint();
    quad.D = omega.cwiseProduct((t * t.adjoint()).transpose());
    quad.c = CVec::Zero(t.rows());
    for (std::size_t k = 0; k < ctx.blocks.size(); ++k)
      quad.c += (1.0 + aux.rho(k)) * t.col(k).conjugate().cwiseProduct(ctx.blocks[k] * aux.gamma[k]);
    const EwrResult ewr = ewr_solve(quad, res.dma.q(), opt.ewr_tol, opt.ewr_max_sweeps);
    res.dma = res.dma.with_weights(ewr.q);

    hq = res.dma.hq();
    const double obj = fp_objective(ctx, hq * res.precoder, aux);
    res.objective.push_back(obj);
    res.iterations = it + 1;
    if (std::abs(obj - prev) <= opt.inner_tol * std::max(std::abs(obj), 1e-12)) {
      res.converged = true;
      break;
    }
    prev = obj;
  }
  res.precoder = rescale_precoder(res.dma, res.precoder, ctx.pmax, false);
  return res;
}

}  // namespace dmamiso
