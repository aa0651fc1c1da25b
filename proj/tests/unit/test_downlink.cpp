#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dmamiso/downlink.hpp"
#include "dmamiso/rates.hpp"
#include "support.hpp"

using namespace dmamiso;

namespace {

// Well-scaled random downlink problem: unit-order channels and noise.
DownlinkContext random_context(int n, int k, int m, RngStream& rng, double pmax = 2.0) {
  std::vector<CMat> blocks;
  for (int u = 0; u < k; ++u) blocks.push_back(testutil::random_matrix(n, m, rng));
  return make_downlink_context(blocks, 0.5, pmax);
}

PddState state_for(const testutil::Instance& in, const DownlinkContext& ctx, RngStream& rng) {
  PddState st;
  st.dma = in.dma;
  st.beta = 1e-2;
  st.beams = initial_beams(ctx);
  st.dual = 1e-3 * testutil::random_matrix(st.beams.rows(), st.beams.cols(), rng);
  st.precoder = update_precoder(st);
  st.aux = fp_auxiliaries(ctx, st.beams);
  return st;
}

}  // namespace

TEST_CASE("FP auxiliaries") {
  RngStream rng(1, 0);
  const DownlinkContext one = random_context(4, 1, 5, rng);
  const CMat v = testutil::random_matrix(4, 1, rng);
  const FpAux a = fp_auxiliaries(one, v);
  CHECK(a.rho(0) == doctest::Approx((one.blocks[0].adjoint() * v).squaredNorm() / one.noise).epsilon(1e-12));

  const DownlinkContext ctx = random_context(4, 3, 5, rng);
  const FpAux z = fp_auxiliaries(ctx, CMat::Zero(4, 3));
  CHECK(z.rho.norm() == 0.0);
  for (const auto& g : z.gamma) CHECK(g.norm() == 0.0);
}

TEST_CASE("F1 at the optimal auxiliaries equals the surrogate rate") {
  RngStream rng(2, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const DownlinkContext ctx = random_context(6, 3, 7, rng);
    const CMat v = testutil::random_matrix(6, 3, rng);
    double direct = 0;
    for (int k = 0; k < 3; ++k) {
      const CMat y = ctx.blocks[k].adjoint() * v;
      const RVec p = y.colwise().squaredNorm().transpose();
      direct += std::log(1.0 + p(k) / (p.sum() - p(k) + ctx.noise));
    }
    CHECK(std::abs(fp_objective(ctx, v, fp_auxiliaries(ctx, v)) - direct) < 1e-9);
  }
  // Same check at scenario scale, through the rate module.
  const auto in = testutil::instance(testutil::scenario(2, 4, 3));
  const DownlinkContext ctx = make_downlink_context(in.blocks, in.sc.noise_ue, *in.sc.pmax);
  const CMat w = testutil::random_matrix(2, 3, rng) * 0.01;
  const CMat v = in.dma.hq() * w;
  CHECK(std::abs(fp_objective(ctx, v, fp_auxiliaries(ctx, v)) - downlink_rate_nats(in.dma, w, in.blocks, ctx.noise)) <
        1e-9);
}

TEST_CASE("curvature matches a finite-difference gradient of F1") {
  RngStream rng(3, 0);
  const DownlinkContext ctx = random_context(5, 3, 4, rng);
  const CMat v = testutil::random_matrix(5, 3, rng);
  const FpAux aux = fp_auxiliaries(ctx, testutil::random_matrix(5, 3, rng));  // any fixed auxiliaries
  const CMat omega = fp_curvature(ctx, aux);
  for (int k = 0; k < 3; ++k) {
    // dF/dv_k^* = (1+rho_k) G_k gamma_k - Omega v_k
    const CVec grad = (1.0 + aux.rho(k)) * (ctx.blocks[k] * aux.gamma[k]) - omega * v.col(k);
    for (int dir = 0; dir < 4; ++dir) {
      const CVec d = testutil::random_vector(5, rng);
      const double h = 1e-6;
      CMat vp = v, vm = v;
      vp.col(k) += h * d;
      vm.col(k) -= h * d;
      const double fd = (fp_objective(ctx, vp, aux) - fp_objective(ctx, vm, aux)) / (2 * h);
      const double analytic = 2.0 * d.dot(grad).real();
      CHECK(fd == doctest::Approx(analytic).epsilon(1e-6));
    }
  }
}

TEST_CASE("power-constrained solve: identity curvature closed form") {
  RngStream rng(4, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const CMat phi = testutil::random_matrix(6, 3, rng);
    const double p = 0.5 + trial;
    const double lam = std::sqrt(phi.squaredNorm() / p) - 1.0;
    const PowerSolution s = solve_power_constrained(CMat::Identity(6, 6), phi, p);
    if (lam > 0) {
      CHECK(std::abs(s.lambda - lam) <= 1e-8 * std::max(1.0, lam));
      CHECK(std::abs(s.x.squaredNorm() - p) < 1e-6 * p);
    } else {
      CHECK(s.lambda == 0.0);
      CHECK((s.x - phi).norm() < 1e-12);
    }
  }
}

TEST_CASE("power-constrained solve: slackness and monotone g") {
  RngStream rng(5, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const CMat psi = 1e-3 * testutil::random_psd(6, rng) + 1e-4 * CMat::Identity(6, 6);
    const CMat phi = testutil::random_matrix(6, 2, rng);
    const double p = 1.0;
    const PowerSolution s = solve_power_constrained(psi, phi, p);
    CHECK(s.x.squaredNorm() <= p + 1e-9);
    if (s.lambda > 0) CHECK(std::abs(s.x.squaredNorm() - p) < 1e-6 * p);
    // KKT stationarity.
    CHECK(((psi + s.lambda * CMat::Identity(6, 6)) * s.x - phi).norm() < 1e-8 * phi.norm());

    Eigen::SelfAdjointEigenSolver<CMat> es(psi);
    const CMat uphi = es.eigenvectors().adjoint() * phi;
    auto g = [&](double l) {
      double acc = 0;
      for (int i = 0; i < 6; ++i) acc += uphi.row(i).squaredNorm() / std::pow(es.eigenvalues()(i) + l, 2);
      return acc - p;
    };
    double prev = g(0);
    for (double l = 1e-5; l < 1e3; l *= 3) {
      const double cur = g(l);
      CHECK(cur < prev);
      prev = cur;
    }
  }
  // Singular curvature with signal in its null space must still satisfy the budget.
  CMat psi = CMat::Zero(3, 3);
  psi(0, 0) = 1.0;
  const PowerSolution s = solve_power_constrained(psi, CMat::Ones(3, 1), 2.0);
  CHECK(s.lambda > 0);
  CHECK(std::abs(s.x.squaredNorm() - 2.0) < 1e-6 * 2.0);
}

TEST_CASE("block updates of the augmented Lagrangian") {
  RngStream rng(6, 0);
  const auto in = testutil::instance(testutil::scenario(2, 4, 3));
  const DownlinkContext ctx = make_downlink_context(in.blocks, in.sc.noise_ue, *in.sc.pmax);
  PddState st = state_for(in, ctx, rng);

  const double al0 = al_objective(ctx, st);
  st.aux = fp_auxiliaries(ctx, st.beams);
  const double al1 = al_objective(ctx, st);
  CHECK(al1 >= al0 - 1e-12 * std::abs(al0));

  st.beams = update_beams(ctx, st).x;
  const double al2 = al_objective(ctx, st);
  CHECK(al2 >= al1 - 1e-10 * std::abs(al1));
  CHECK(st.beams.squaredNorm() <= ctx.pmax + 1e-9);

  const double pen_before = (st.dma.hq() * st.precoder - st.beams + st.beta * st.dual).squaredNorm();
  bool ridged = true;
  st.precoder = update_precoder(st, &ridged);
  CHECK_FALSE(ridged);
  const CMat hq = st.dma.hq();
  const CMat y = st.beams - st.beta * st.dual;
  CHECK((hq.adjoint() * (hq * st.precoder - y)).norm() < 1e-8 * st.beams.norm());
  CHECK((hq * st.precoder - st.beams + st.beta * st.dual).squaredNorm() <= pen_before * (1 + 1e-12));

  // Quadratic in q equals the penalty term up to ||V - beta Xi||^2.
  const QuadraticProblem quad = assemble_downlink_quadratic(st);
  for (Eigen::Index i = 0; i < quad.D.rows(); ++i)
    for (Eigen::Index j = 0; j < quad.D.cols(); ++j)
      if (i != j) CHECK(quad.D(i, j) == cplx(0.0));
  std::vector<double> gaps;
  for (int t = 0; t < 20; ++t) {
    const DmaState moved = st.dma.with_weights(testutil::random_lp(8, rng));
    const double pen = (moved.hq() * st.precoder - y).squaredNorm();
    gaps.push_back(pen - quad_objective(quad, moved.q()));
  }
  double mean = 0;
  for (double g : gaps) mean += g / 20;
  double var = 0;
  for (double g : gaps) var += (g - mean) * (g - mean) / 20;
  CHECK(var < 1e-16);
  CHECK(mean == doctest::Approx(y.squaredNorm()).epsilon(1e-9));
}

TEST_CASE("least-squares precoder special cases") {
  RngStream rng(7, 0);
  const auto in = testutil::instance(testutil::scenario(3, 1, 2));  // L = N: square HQ
  PddState st;
  st.dma = in.dma;
  st.beta = 0.5;
  st.beams = testutil::random_matrix(3, 2, rng);
  st.dual = testutil::random_matrix(3, 2, rng);
  const CMat w = update_precoder(st);
  const CMat oracle = st.dma.hq().inverse() * (st.beams - st.beta * st.dual);
  CHECK((w - oracle).norm() < 1e-10 * oracle.norm());

  const auto in2 = testutil::instance(testutil::scenario(2, 3, 2));
  PddState s2;
  s2.dma = in2.dma;
  s2.beta = 1.0;
  const CMat target = in2.dma.hq() * testutil::random_matrix(2, 2, rng);
  s2.beams = target;
  s2.dual = CMat::Zero(6, 2);
  CHECK((in2.dma.hq() * update_precoder(s2) - target).norm() < 1e-8 * target.norm());

  s2.precoder = CMat::Zero(2, 2);
  const QuadraticProblem q = assemble_downlink_quadratic(s2);
  CHECK(q.D.norm() == 0.0);
  CHECK(q.c.norm() == 0.0);
  const EwrResult r = ewr_solve(q, s2.dma.q());
  CHECK(r.q == s2.dma.q());
}

TEST_CASE("PDD run converges on a small scenario") {
  const auto in = testutil::instance(testutil::scenario(2, 4, 2));
  const DownlinkContext ctx = make_downlink_context(in.blocks, in.sc.noise_ue, *in.sc.pmax);
  const PddResult r = pdd_run(ctx, in.dma);
  CHECK(r.converged);
  CHECK(r.violation.back() < 1e-5);
  CHECK(r.max_block_drop <= 1e-8);
  CHECK(r.dual_updates + r.penalty_updates == r.outer_iterations);
  CHECK((r.dma.hq() * r.precoder).squaredNorm() <= ctx.pmax * (1 + 1e-12));
  for (Eigen::Index i = 0; i < r.dma.q().size(); ++i) CHECK(is_feasible(r.dma.q()(i), ConstraintSet::Lorentzian, 1e-12));
  const PddResult again = pdd_run(ctx, in.dma);
  CHECK(again.surrogate_nats == r.surrogate_nats);
}

TEST_CASE("relaxed AO meets the budget exactly") {
  const auto in = testutil::instance(testutil::scenario(2, 4, 3));
  const DownlinkContext ctx = make_downlink_context(in.blocks, in.sc.noise_ue, *in.sc.pmax);
  const RelaxedResult r = relaxed_ao_run(ctx, in.dma);
  CHECK((r.dma.hq() * r.precoder).squaredNorm() == doctest::Approx(ctx.pmax).epsilon(1e-12));
  for (std::size_t i = 1; i < r.objective.size(); ++i)
    CHECK(r.objective[i] >= r.objective[i - 1] - 1e-9 * std::abs(r.objective[i - 1]));
}

TEST_CASE("single user, unconstrained weights: PDD reaches the beamforming bound") {
  // Any beam is reachable when q is free, so the optimum is log(1 + P lambda_max(G) / N).
  Scenario sc = testutil::scenario(2, 4, 1);
  sc.constraint = ConstraintSet::Unconstrained;
  const auto in = testutil::instance(sc);
  const DownlinkContext ctx = make_downlink_context(in.blocks, sc.noise_ue, *sc.pmax);
  Eigen::SelfAdjointEigenSolver<CMat> es(ctx.grams[0]);
  const double bound = std::log1p(ctx.pmax * es.eigenvalues().maxCoeff() / ctx.noise);
  const PddResult p = pdd_run(ctx, in.dma);
  CHECK(downlink_surrogate_nats(ctx, p.dma, p.precoder) == doctest::Approx(bound).epsilon(1e-6));
  const RelaxedResult a = relaxed_ao_run(ctx, in.dma);
  CHECK(downlink_surrogate_nats(ctx, a.dma, a.precoder) <= bound * (1 + 1e-9));
}
