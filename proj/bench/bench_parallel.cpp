// Serial reference versus OpenMP for the three parallel loops: the PARO
// component loop, the ttsvd-best permutations and the experiment runs.
// Argument 0 selects ExecutionPolicy::serial, 1 selects openmp.

#include <benchmark/benchmark.h>

#include "paro/experiments.hpp"
#include "paro/generators.hpp"
#include "paro/paro.hpp"
#include "paro/rank1.hpp"

namespace {

paro::ExecutionPolicy policy_of(const benchmark::State& state) {
  return state.range(0) ? paro::ExecutionPolicy::openmp : paro::ExecutionPolicy::serial;
}

void BM_ParoComponentLoop(benchmark::State& state) {
  const paro::DenseTensor y = paro::gaussian_tensor({20, 20, 20}, 1);
  const paro::KruskalModel init = paro::random_kruskal_init(y.shape(), 16, 2);
  paro::ParoOptions opts;
  opts.schedule = paro::MuSchedule::fixed(5.0);
  opts.max_iters = 20;
  opts.tol = 1e-300;
  opts.stall_tol = 0.0;
  opts.policy = policy_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(paro::paro_decompose(y, init, opts));
}
BENCHMARK(BM_ParoComponentLoop)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_TtsvdBestPermutations(benchmark::State& state) {
  const paro::DenseTensor y = paro::gaussian_tensor({8, 8, 8, 8}, 3);
  paro::Rank1Options opts;
  opts.init = paro::parse_rank1_init("ttsvd-best");
  opts.max_iters = 20;
  opts.policy = policy_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(paro::solve_rank1(y, opts));
}
BENCHMARK(BM_TtsvdBestPermutations)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ExperimentRuns(benchmark::State& state) {
  paro::ExperimentSpec spec;
  spec.task = paro::TaskKind::cpd;
  spec.generator.kind = "random";
  spec.generator.dims = {6, 6, 6};
  spec.generator.rank = 4;
  spec.runs = 16;
  spec.max_iters = 50;
  spec.tol = 1e-9;
  paro::VariantSpec v;
  v.name = "paro";
  v.cpd_algorithm = "paro";
  spec.variants.push_back(v);
  spec.policy = policy_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(paro::run_success_ratio(spec));
}
BENCHMARK(BM_ExperimentRuns)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
