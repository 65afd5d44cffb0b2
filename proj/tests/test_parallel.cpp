#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "sdet/parallel.hpp"
#include "sdet/parametrix.hpp"

using namespace sdet;

TEST_CASE("parallel_map matches the serial loop") {
  for (int threads : {1, 2, 4}) {
    set_worker_threads(threads);
    for (std::size_t n : {0u, 1u, 7u, 1000u}) {
      auto f = [](std::size_t i) { return std::sin(0.1 * static_cast<double>(i)) * static_cast<double>(i); };
      CHECK(parallel_map(n, f) == serial_map(n, f));
    }
  }
}

TEST_CASE("lowest failing index is rethrown") {
  set_worker_threads(4);
  auto f = [](std::size_t i) -> int {
    if (i == 5) throw std::invalid_argument("five");
    if (i == 40) throw std::runtime_error("forty");
    return static_cast<int>(i);
  };
  CHECK_THROWS_WITH_AS(parallel_map(100, f), "five", std::invalid_argument);
}

TEST_CASE("kernel grids agree with pointwise serial evaluation") {
  const ApproximateHeatKernel kn(parse_potential("sin + 0.5cos(2x)"), 3);
  std::vector<double> xs;
  for (int i = 0; i < 12; ++i) xs.push_back(2.0 * M_PI * i / 12);
  const std::vector<double> ts = {0.005, 0.05};
  for (int threads : {1, 3}) {
    set_worker_threads(threads);
    const HeatKernel1D g = parametrix_kernel_grid(kn, ts, xs, xs);
    for (std::size_t it = 0; it < ts.size(); ++it)
      for (std::size_t ix = 0; ix < xs.size(); ++ix)
        for (std::size_t iy = 0; iy < xs.size(); ++iy) CHECK(g.at(it, ix, iy) == kn.value(ts[it], xs[ix], xs[iy]));
  }
  const SpectralHeatOracle o(parse_potential("sin"), 64);
  set_worker_threads(1);
  const HeatKernel1D a = oracle_kernel_grid(o, ts, xs, xs);
  set_worker_threads(3);
  const HeatKernel1D b = oracle_kernel_grid(o, ts, xs, xs);
  CHECK(a.values == b.values);
}
