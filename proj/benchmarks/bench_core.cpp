#include <benchmark/benchmark.h>

#include "ivlab/estimator.hpp"
#include "ivlab/experiments.hpp"
#include "ivlab/linalg.hpp"
#include "ivlab/mechanism.hpp"
#include "ivlab/rng.hpp"
#include "ivlab/stats.hpp"

namespace {

using namespace ivlab;

estimator::SampleSet synthetic_set(std::size_t n) {
  stats::RngStream rng(17);
  estimator::SampleSet s;
  s.arm_count = 1;
  s.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int z = rng.uniform01() < 0.5 ? 1 : 0;
    const int x = rng.uniform01() < 0.7 ? z : 1;
    s.records.push_back({z, x, 0.5 * x + stats::sample_normal(0.0, 1.0, rng)});
  }
  return s;
}

void BM_WaldEstimate(benchmark::State& state) {
  const auto s = synthetic_set(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimator::wald_estimate(s));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_WaldEstimate)->Arg(1000)->Arg(100000);

void BM_ApproximationBoundBinary(benchmark::State& state) {
  const auto s = synthetic_set(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimator::approximation_bound_binary(s, 0.05, 1.0));
  }
}
BENCHMARK(BM_ApproximationBoundBinary)->Arg(100000);

void BM_MinSingularValue(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  linalg::Matrix m(static_cast<std::size_t>(k));
  stats::RngStream rng(23);
  for (auto& v : m.a) v = rng.uniform01() * 100.0;
  for (int i = 0; i < k; ++i) m.at(i, i) += 100.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(linalg::min_singular_value(m));
  }
}
BENCHMARK(BM_MinSingularValue)->Arg(2)->Arg(8)->Arg(16);

void BM_TruncatedGaussianSample(benchmark::State& state) {
  const stats::TruncatedGaussian dist{-0.5, 1.0, -1.0, 1.0};
  stats::RngStream rng(29);
  for (auto _ : state) {
    benchmark::DoNotOptimize(stats::sample_truncated_gaussian(dist, rng));
  }
}
BENCHMARK(BM_TruncatedGaussianSample);

void BM_SamplingStage(benchmark::State& state) {
  harness::Config cfg = harness::regret_scaling_config();
  cfg.policy.ell = static_cast<std::uint64_t>(state.range(0));
  cfg.policy.horizon = 0;
  for (auto _ : state) {
    const stats::StreamFamily streams{stats::RngSeed{31}};
    benchmark::DoNotOptimize(mechanism::run_sampling_stage(
        cfg.policy, cfg.population, 0.1, streams));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SamplingStage)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_RacingStage(benchmark::State& state) {
  harness::Config cfg = harness::racing_config();
  cfg.policy.horizon = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(harness::run_racing_preset_once(37, cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RacingStage)->Arg(4000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
