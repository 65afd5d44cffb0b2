// Parallel kernels against their serial reference loops.
#include <benchmark/benchmark.h>

#include <cmath>

#include "sdet/parallel.hpp"
#include "sdet/parametrix.hpp"
#include "sdet/random_complex.hpp"
#include "sdet/runner.hpp"

namespace {

using namespace sdet;

std::vector<double> circle_grid(int n) {
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back(2.0 * M_PI * i / n);
  return xs;
}

const ApproximateHeatKernel& kernel() {
  static const ApproximateHeatKernel kn(parse_potential("sin + 0.5cos(2x)"), 4);
  return kn;
}

void BM_ParametrixGridSerial(benchmark::State& state) {
  const auto xs = circle_grid(static_cast<int>(state.range(0)));
  const auto& kn = kernel();
  for (auto _ : state) {
    auto v = serial_map(xs.size() * xs.size(),
                        [&](std::size_t i) { return kn.value(0.01, xs[i / xs.size()], xs[i % xs.size()]); });
    benchmark::DoNotOptimize(v.data());
  }
}

void BM_ParametrixGridParallel(benchmark::State& state) {
  const auto xs = circle_grid(static_cast<int>(state.range(0)));
  set_worker_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) {
    auto g = parametrix_kernel_grid(kernel(), {0.01}, xs, xs);
    benchmark::DoNotOptimize(g.values.data());
  }
}

void BM_OracleGridSerial(benchmark::State& state) {
  const auto xs = circle_grid(static_cast<int>(state.range(0)));
  const SpectralHeatOracle o(parse_potential("sin"), 64);
  for (auto _ : state) {
    auto v = serial_map(xs.size() * xs.size(),
                        [&](std::size_t i) { return o.kernel(0.01, xs[i / xs.size()], xs[i % xs.size()]); });
    benchmark::DoNotOptimize(v.data());
  }
}

void BM_OracleGridParallel(benchmark::State& state) {
  const auto xs = circle_grid(static_cast<int>(state.range(0)));
  const SpectralHeatOracle o(parse_potential("sin"), 64);
  set_worker_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) {
    auto g = oracle_kernel_grid(o, {0.01}, xs, xs);
    benchmark::DoNotOptimize(g.values.data());
  }
}

void BM_VolterraCorrection(benchmark::State& state) {
  VolterraOptions opts;
  opts.k_max = static_cast<int>(state.range(0));
  opts.nodes = 8;
  for (auto _ : state) {
    auto r = volterra_correct(kernel(), 0.05, 1.0, 1.0, opts);
    benchmark::DoNotOptimize(r.value);
  }
}

void BM_FiniteConstancy(benchmark::State& state) {
  RunOptions o;
  o.use_cache = false;
  o.jobs = static_cast<int>(state.range(0));
  const json cfg = {{"experiment", "finite-bv"}, {"parameters", {{"seeds", 20}, {"trace_cases", 0}, {"duhamel_cases", 0}}}};
  for (auto _ : state) {
    auto out = run(cfg, o);
    benchmark::DoNotOptimize(out.exit_code);
  }
}

}  // namespace

BENCHMARK(BM_ParametrixGridSerial)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ParametrixGridParallel)->Args({32, 1})->Args({64, 1})->Args({64, 4})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OracleGridSerial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OracleGridParallel)->Args({64, 1})->Args({64, 4})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VolterraCorrection)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FiniteConstancy)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
