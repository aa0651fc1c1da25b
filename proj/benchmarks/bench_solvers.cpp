#include <benchmark/benchmark.h>

#include "dmamiso/downlink.hpp"
#include "dmamiso/lorentzian_qp.hpp"
#include "dmamiso/rates.hpp"
#include "dmamiso/uplink.hpp"

using namespace dmamiso;

namespace {

struct Problem {
  Scenario sc;
  std::vector<UserStat> stats;
  std::vector<CMat> blocks;
  DmaState dma;
};

Problem make_problem(int n) {
  Problem p;
  p.sc = resolve_scenario({{"L", "8"}, {"S", std::to_string(n / 8)}, {"K", "4"}, {"K0_db", "10"}, {"Pmax_dbm", "5"}});
  p.stats = stat_matrices(place_users(p.sc), p.sc).first;
  p.blocks = composite_blocks(p.stats);
  p.dma = assemble_views(initial_weights(p.sc), microstrip_propagation(p.sc), p.sc);
  return p;
}

QuadraticProblem random_quadratic(int n) {
  RngStream rng(1, 0);
  CMat a(n, n);
  CVec c(n);
  for (int j = 0; j < n; ++j) {
    c(j) = rng.complex_gaussian();
    for (int i = 0; i < n; ++i) a(i, j) = rng.complex_gaussian();
  }
  return {a * a.adjoint(), c, ConstraintSet::Lorentzian};
}

void BM_EwrSolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const QuadraticProblem p = random_quadratic(n);
  const CVec q0 = CVec::Constant(n, constraint_map(0.0));
  for (auto _ : state) benchmark::DoNotOptimize(ewr_solve(p, q0));
}
BENCHMARK(BM_EwrSolve)->Arg(16)->Arg(64)->Arg(256);

void BM_WmmseIteration(benchmark::State& state) {
  const Problem p = make_problem(static_cast<int>(state.range(0)));
  const Decoder d = state.range(1) ? Decoder::Sic : Decoder::Nsic;
  const UplinkContext ctx = make_uplink_context(d, p.blocks, p.sc.noise_bs);
  for (auto _ : state) {
    const ReceiverWeights rw = update_receiver_and_weight(ctx, p.dma);
    const UplinkQuadratic quad = assemble_uplink_quadratic(ctx, p.dma, rw);
    benchmark::DoNotOptimize(ewr_solve(quad.problem, p.dma.q()));
  }
}
BENCHMARK(BM_WmmseIteration)->Args({16, 1})->Args({64, 1})->Args({16, 0})->Args({64, 0})->Unit(benchmark::kMillisecond);

void BM_PddRun(benchmark::State& state) {
  const Problem p = make_problem(static_cast<int>(state.range(0)));
  const DownlinkContext ctx = make_downlink_context(p.blocks, p.sc.noise_ue, *p.sc.pmax);
  for (auto _ : state) benchmark::DoNotOptimize(pdd_run(ctx, p.dma));
}
BENCHMARK(BM_PddRun)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_McRate(benchmark::State& state) {
  const Problem p = make_problem(64);
  const RateMode mode = static_cast<RateMode>(state.range(0));
  const CMat w = CMat::Identity(8, 4) * 1e-2;
  for (auto _ : state) benchmark::DoNotOptimize(mc_rate(mode, p.dma, &w, p.stats, p.sc, 1000, 1));
}
BENCHMARK(BM_McRate)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
