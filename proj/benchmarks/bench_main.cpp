#include <benchmark/benchmark.h>

#include "noisyopt/bandit_ci.hpp"
#include "noisyopt/optimizer.hpp"
#include "noisyopt/polyreg.hpp"
#include "noisyopt/testbed.hpp"

using namespace noisyopt;

namespace {

SampleLog noisy_log(int d, std::size_t m, std::uint64_t seed) {
  RngStream rng(seed);
  SampleLog log(static_cast<std::size_t>(d), m);
  Point z(static_cast<std::size_t>(d));
  for (std::size_t t = 0; t < m; ++t) {
    for (auto& v : z) v = rng.uniform();
    log.append(z, z[0] * z[0] + rng.normal());
  }
  return log;
}

void BM_LocalFit(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const FeatureBasis basis(d, 2);
  const auto log = noisy_log(d, static_cast<std::size_t>(state.range(1)), 1);
  const Point x(static_cast<std::size_t>(d), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(local_fit(basis, log, x, 0.3));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_LocalFit)->Args({1, 1000})->Args({2, 1000})->Args({2, 10000});

void BM_SelectBandwidth(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const std::size_t m = static_cast<std::size_t>(state.range(1));
  const FeatureBasis basis(d, 1);
  const auto samples = PooledSamples::from_log(noisy_log(d, m, 2));
  const SampleIndex index(samples);
  BandwidthRule rule = BandwidthRule::for_budget(m);
  const Point x(static_cast<std::size_t>(d), 0.4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(select_bandwidth(rule, samples, index, basis, x, 2.0, 2.0, 1e-8));
  }
}
BENCHMARK(BM_SelectBandwidth)->Args({1, 4096})->Args({2, 4096});

void BM_RunActive(benchmark::State& state) {
  const auto f = make_strongly_convex(1, 2.0, Point{0.3});
  OptimizerConfig cfg;
  cfg.n = static_cast<std::size_t>(state.range(0));
  cfg.grid_size = 512;
  cfg.alpha = f.alpha;
  cfg.M = f.holder_M;
  RngStream grng(3);
  const auto grid = build_grid(cfg, 1, grng);
  for (auto _ : state) {
    NoisyOracle oracle(f, 1.0, cfg.n, RngStream(4));
    benchmark::DoNotOptimize(run_active(oracle, cfg, grid));
  }
}
BENCHMARK(BM_RunActive)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
