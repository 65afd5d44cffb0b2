#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sdet/linalg.hpp"
#include "sdet/parametrix.hpp"

using namespace sdet;

namespace {

using GR = GaussianRational;

FourierSeries constant(long c) { return FourierSeries::constant(GR{c}); }

// single-term symbol c * xi^a R^b with the given lift
LaurentSymbol term(const FourierSeries& c, int a, int b, int lift = 0) {
  LaurentSymbol s(a - 2 * b + 2 * lift);
  s.add({a, b, lift}, c);
  return s;
}

LaurentSymbol sum(std::initializer_list<LaurentSymbol> parts) {
  LaurentSymbol s(parts.begin()->order());
  for (const auto& p : parts) s += p;
  return s;
}

// free periodic heat kernel by its eigenfunction expansion
double free_kernel(double t, double z, double shift = 0.0) {
  double s = 0.0;
  for (int n = -400; n <= 400; ++n) s += std::exp(-t * (n * n + shift)) * std::cos(n * z);
  return s / (2.0 * M_PI);
}

// (d - lambda) # q evaluated numerically with x-derivatives by a 5-point stencil
cplx composed_numeric(const std::vector<LaurentSymbol>& q, const FourierSeries& v, const FourierSeries& base, double x,
                      double xi, cplx lambda) {
  auto qv = [&](double y) {
    cplx s = 0.0;
    for (const auto& p : q) s += p.evaluate(y, xi, lambda, base);
    return s;
  };
  const double h = 1e-3;
  const cplx f0 = qv(x), fp = qv(x + h), fm = qv(x - h), fpp = qv(x + 2 * h), fmm = qv(x - 2 * h);
  const cplx d1 = (fmm - 8.0 * fm + 8.0 * fp - fpp) / (12.0 * h);
  const cplx d2 = (-fmm + 16.0 * fm - 30.0 * f0 + 16.0 * fp - fpp) / (12.0 * h * h);
  return (xi * xi + v(x) - lambda) * f0 - cplx(0.0, 2.0) * xi * d1 - d2;
}

}  // namespace

TEST_CASE("potential parsing and exact Fourier arithmetic") {
  const FourierSeries s = parse_potential("sin");
  CHECK(s.coefficient(1) == GR(0, Rational(-1, 2)));
  CHECK(s.coefficient(-1) == GR(0, Rational(1, 2)));
  CHECK(s.is_real());
  CHECK(parse_potential("sin(x)") == s);
  CHECK(parse_potential("1*sin x") == s);
  const FourierSeries p = parse_potential("0.5*cos(2x) - 3 + 1e-1");
  CHECK(p.coefficient(0) == GR(Rational(-29, 10)));
  CHECK(p.coefficient(2) == GR(Rational(1, 4)));
  CHECK(std::abs(p(0.7) - (0.5 * std::cos(1.4) - 2.9)) <= 1e-15);
  // sin^2 = 1/2 - cos(2x)/2
  const FourierSeries sq = s * s;
  CHECK(sq == parse_potential("0.5 - 0.5cos2x"));
  CHECK(s.derivative() == parse_potential("cos"));
  CHECK(rational_from_decimal("0.1") == Rational(1, 10));
  CHECK(rational_from_string("-7/3") == Rational(-7, 3));
  CHECK_THROWS_AS(parse_potential("tan"), std::invalid_argument);
  CHECK_THROWS_AS(parse_potential(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_potential("sin(17x)"), std::invalid_argument);
  CHECK(FourierSeries::from_json(p.to_json()) == p);
  // truncation keeps track of the dropped l1 mass
  const FourierSeries high = parse_potential("cos(10x)");
  const FourierSeries prod = high * high;
  CHECK(prod.coefficient(0) == GR(Rational(1, 2)));
  CHECK(prod.coefficient(20) == GR{});
  CHECK(prod.dropped_tail() == doctest::Approx(0.5));
}

TEST_CASE("constant-coefficient parametrices") {
  const Parametrix zero = parametrix_symbols(FourierSeries{}, 4);
  CHECK(zero.q[0] == term(constant(1), 0, 1));
  for (int m = 1; m <= 5; ++m) CHECK(zero.q[m].is_zero());
  CHECK(zero.remainder[0].is_zero());
  CHECK(zero.remainder[1].is_zero());

  const FourierSeries c = constant(3);
  const Parametrix folded = parametrix_symbols(c, 4, ParametrixScheme::folded);
  CHECK(folded.q[0] == term(constant(1), 0, 1));
  CHECK(folded.q[1].is_zero());
  CHECK(folded.q[2].is_zero());
  const Parametrix principal = parametrix_symbols(c, 4);
  CHECK(principal.q[2] == term(constant(-3), 0, 2));
}

TEST_CASE("recursion terms for v = sin x") {
  const FourierSeries v = parse_potential("sin");
  const FourierSeries v1 = v.derivative(), v2 = v1.derivative();
  // principal scheme, hand expansion of q_M = R [2 i xi q_{M-1}' + q_{M-2}'' - v q_{M-2}]
  const Parametrix p = parametrix_symbols(v, 3);
  CHECK(p.q[1].is_zero());
  CHECK(p.q[2] == term(GR{-1} * v, 0, 2));
  CHECK(p.q[3] == term(GR(0, -2) * v1, 1, 3));
  CHECK(p.q[4] == sum({term(GR{4} * v2, 2, 4), term(v * v - v2, 0, 3)}));
  // folded scheme: derivatives hit the resolvent, -b v' R^{b+1}
  const Parametrix f = parametrix_symbols(v, 1, ParametrixScheme::folded);
  CHECK(f.q[1] == term(GR(0, -2) * v1, 1, 3, 1));
  CHECK(f.q[2] == sum({term(GR{4} * v2, 2, 4, 1), term(GR{-12} * (v1 * v1), 2, 5, 2), term(GR{-1} * v2, 0, 3, 1),
                       term(GR{2} * (v1 * v1), 0, 4, 2)}));
}

TEST_CASE("defining relation holds exactly") {
  for (const char* text : {"sin", "1 + sin", "0.5*cos(2x) - sin(3x) + 2", "0"})
    for (auto scheme : {ParametrixScheme::principal, ParametrixScheme::folded})
      for (int N = 0; N <= 4; ++N) {
        const Parametrix p = parametrix_symbols(parse_potential(text), N, scheme);
        CHECK(defining_relation_defect(p).empty());
        for (int m = 0; m <= N + 1; ++m) {
          CHECK(p.q[m].order() == -2 - m);
          for (const auto& kv : p.q[m].terms()) CHECK(kv.first.order() == -2 - m);
        }
        CHECK(p.remainder[0].order() == -(N + 2));
        CHECK(p.remainder[1].order() == -(N + 3));
      }
  CHECK_THROWS_AS(parametrix_symbols(parse_potential("sin"), 9), std::invalid_argument);
  std::map<int, GR> bad = {{1, GR(1)}};
  CHECK_THROWS_AS(parametrix_symbols(FourierSeries::from_coefficients(bad), 2), std::invalid_argument);
}

TEST_CASE("defining relation pointwise by finite differences") {
  const FourierSeries v = parse_potential("1 + sin - 0.5cos(2x)");
  for (auto scheme : {ParametrixScheme::principal, ParametrixScheme::folded}) {
    const Parametrix p = parametrix_symbols(v, 3, scheme);
    for (double x : {0.3, 2.0, 4.4})
      for (double xi : {0.7, 3.0})
        for (cplx lambda : {cplx(-2.0, 1.0), cplx(-0.5, -3.0)}) {
          const cplx lhs = composed_numeric(p.q, v, p.base, x, xi, lambda);
          cplx rhs = 1.0;
          for (const auto& r : p.remainder) rhs += r.evaluate(x, xi, lambda, p.base);
          CHECK(std::abs(lhs - rhs) <= 1e-7);
        }
  }
}

TEST_CASE("Gaussian moments against quadrature") {
  for (int a = 0; a <= 6; ++a)
    for (double t : {0.05, 0.3})
      for (double z : {0.0, 0.4, -1.1}) {
        cplx num = 0.0;
        const double width = 12.0 / std::sqrt(t);
        for (int piece = 0; piece < 64; ++piece) {
          const double lo = -width + piece * (2.0 * width / 64), hi = lo + 2.0 * width / 64;
          const QuadratureRule q = gauss_legendre(16, lo, hi);
          for (std::size_t i = 0; i < q.nodes.size(); ++i) {
            const double xi = q.nodes[i];
            num += q.weights[i] * std::pow(xi, a) * std::exp(cplx(-t * xi * xi, z * xi));
          }
        }
        CHECK(std::abs(gaussian_moment(a, t, z) - num) <= 1e-10 * std::max(1.0, std::abs(num)));
      }
}

TEST_CASE("kernels of single symbols") {
  const LaurentSymbol q0 = term(constant(1), 0, 1);
  for (double t : {1e-3, 0.01, 0.1})
    CHECK(std::abs(kernel_from_symbol(q0, t, 0.4, 0.4) - 1.0 / std::sqrt(4.0 * M_PI * t)) <= 1e-12 / std::sqrt(t));
  // periodized at larger t: eigenfunction sum
  CHECK(std::abs(kernel_from_symbol(q0, 1.0, 0.3, 2.0) - free_kernel(1.0, 0.3 - 2.0)) <= 1e-14);
  CHECK(std::abs(kernel_from_symbol(q0, 2.5, 1.0, -2.0) - free_kernel(2.5, 3.0)) <= 1e-14);
  const LaurentSymbol b2 = term(constant(1), 0, 2);
  for (double t : {0.01, 0.1}) CHECK(std::abs(kernel_from_symbol(b2, t, 1.0, 1.0) - t / std::sqrt(4.0 * M_PI * t)) <= 1e-13);
  // homogeneity: order -2-M gives t^{(M-1)/2} on the diagonal
  const Parametrix p = parametrix_symbols(parse_potential("sin"), 5);
  for (int M : {2, 3, 4, 5}) {
    const double t = 1e-3, x = 1.3;
    const cplx a = kernel_from_symbol(p.q[M], t, x, x), b = kernel_from_symbol(p.q[M], t / 2.0, x, x);
    if (std::abs(a) < 1e-300) continue;  // odd M vanish on the diagonal
    CHECK(std::log(std::abs(a / b)) / std::log(2.0) == doctest::Approx((M - 1) / 2.0).epsilon(1e-9));
  }
  CHECK(std::abs(kernel_from_symbol(p.q[3], 0.01, 1.3, 1.3)) <= 1e-15);
  LaurentSymbol poly(0);
  poly.add({0, 0, 0}, constant(1));
  CHECK_THROWS_AS(kernel_from_symbol(poly, 0.1, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("approximate heat kernel: trivial potentials") {
  const ApproximateHeatKernel free_kn(FourierSeries{}, 4);
  for (double t : {0.01, 0.5, 2.0})
    for (double z : {0.0, 1.0, 3.0}) {
      CHECK(std::abs(free_kn.value(t, 0.2 + z, 0.2) - free_kernel(t, z)) <= 1e-13);
      CHECK(free_kn.remainder(t, z, 0.2) == cplx(0.0));
    }
  // folded constant potential: K_N(t, x, x) = (4 pi t)^{-1/2} e^{-m^2 t}
  const ApproximateHeatKernel massive(constant(4), 4, ParametrixScheme::folded);
  for (double t : {1e-3, 0.01, 0.1})
    CHECK(std::abs(massive.value(t, 0.7, 0.7) - std::exp(-4.0 * t) / std::sqrt(4.0 * M_PI * t)) <=
          1e-13 / std::sqrt(t));
  CHECK(std::abs(massive.value(1.5, 0.7, 2.0) - free_kernel(1.5, -1.3, 4.0)) <= 1e-13);
}

TEST_CASE("remainder scaling for v = sin x") {
  const FourierSeries v = parse_potential("sin");
  std::vector<double> ts;
  for (int i = 0; i < 7; ++i) ts.push_back(std::pow(10.0, -3.0 + i / 3.0));
  for (int N : {2, 4}) {
    const ApproximateHeatKernel kn(v, N);
    std::vector<double> sup;
    for (double t : ts) {
      double s = 0.0;
      for (int i = 0; i < 64; ++i) s = std::max(s, std::abs(kn.remainder(t, 2.0 * M_PI * i / 64, 2.0 * M_PI * i / 64)));
      sup.push_back(s);
    }
    const double target = (N - 1) / 2.0;
    CHECK(loglog_slope(ts, sup) >= 0.8 * target);
    CHECK(loglog_slope(ts, sup) <= 1.2 * target);
  }
}

TEST_CASE("spectral oracle") {
  const SpectralHeatOracle free_o(FourierSeries{}, 64);
  CHECK(std::abs(free_o.diagonal(0.01, 0.5) - 2.8209479177387814) <= 1e-12);
  const SpectralHeatOracle shifted(constant(1), 64);
  CHECK(std::abs(shifted.diagonal(0.01, 0.5) - 2.8209479177387814 * std::exp(-0.01)) <= 1e-12);
  CHECK(free_o.error_estimate(0.01) < 1e-10);
  CHECK_THROWS_AS(SpectralHeatOracle(FourierSeries{}, 32), std::invalid_argument);
  // semigroup: int K(t, x, y) K(t, y, z) dy = K(2t, x, z)
  const FourierSeries v = parse_potential("sin + 0.3cos(2x)");
  const SpectralHeatOracle o(v, 64);
  const int grid = 512;
  for (double t : {0.05, 0.2}) {
    const double x = 0.4, z = 2.9;
    cplx s = 0.0;
    for (int j = 0; j < grid; ++j) {
      const double y = 2.0 * M_PI * j / grid;
      s += o.kernel(t, x, y) * std::conj(o.kernel(t, z, y));
    }
    s *= 2.0 * M_PI / grid;
    CHECK(std::abs(s - o.kernel(2.0 * t, x, z)) <= 1e-8);
  }
  const OracleValue ov = spectral_heat_oracle(v, 0.1, 1.0, 1.0, 64);
  CHECK(std::abs(ov.value - o.kernel(0.1, 1.0, 1.0)) <= 1e-12);
}

TEST_CASE("parametrix accuracy against the oracle") {
  const FourierSeries v = parse_potential("sin");
  const ApproximateHeatKernel kn(v, 4);
  const SpectralHeatOracle o(v, SpectralHeatOracle::recommended_modes(1e-3));
  std::vector<double> ts, err;
  for (int i = 0; i < 7; ++i) {
    const double t = std::pow(10.0, -3.0 + i / 3.0);
    double e = 0.0;
    for (int j = 0; j < 32; ++j) {
      const double x = 2.0 * M_PI * j / 32;
      e = std::max(e, std::abs(kn.value(t, x, x) - o.diagonal(t, x)));
    }
    ts.push_back(t);
    err.push_back(e);
  }
  CHECK(loglog_slope(ts, err) >= 1.2);
  double c = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) c = std::max(c, err[i] / std::pow(ts[i], 1.5));
  for (std::size_t i = 0; i < ts.size(); ++i) CHECK(err[i] <= c * std::pow(ts[i], 1.5));
}

TEST_CASE("heat coefficients") {
  const auto free_b = heat_coefficients(FourierSeries{}, 4);
  CHECK(std::abs(free_b[0].value - std::sqrt(M_PI)) <= 1e-15);
  for (int k = 1; k <= 4; ++k) CHECK(free_b[k].sqrt_pi_multiple.is_zero());

  const auto sin_b = heat_coefficients(parse_potential("sin"), 6);
  for (int k = 1; k <= 6; k += 2) CHECK(sin_b[k].sqrt_pi_multiple.is_zero());
  CHECK(sin_b[2].sqrt_pi_multiple.is_zero());

  const FourierSeries v = parse_potential("1 + sin");
  const auto b = heat_coefficients(v, 6);
  CHECK(b[2].sqrt_pi_multiple == GR{-1});
  CHECK(std::abs(b[2].value + std::sqrt(M_PI)) <= 1e-15);
  for (int k = 1; k <= 6; k += 2) CHECK(b[k].sqrt_pi_multiple.is_zero());
  // small-t trace expansion against the oracle trace sum e^{-t lambda_j}
  const SpectralHeatOracle o(v, 96);
  for (double t : {0.01, 0.03}) {
    double trace = 0.0;
    for (Eigen::Index j = 0; j < o.eigenvalues().size(); ++j) trace += std::exp(-t * o.eigenvalues()(j));
    cplx expansion = 0.0;
    for (const auto& h : b) expansion += std::pow(t, h.t_exponent) * h.value;
    CHECK(std::abs(trace - expansion) <= 10.0 * std::pow(t, 3.0));
  }
  // theta = d/dx: odd l, so even k vanish
  ThetaOperator d1;
  d1.order = 1;
  for (const auto& h : heat_coefficients(parse_potential("sin + cos(2x)"), 4, d1))
    if (h.k % 2 == 0) CHECK(h.sqrt_pi_multiple.is_zero());
  // theta = d^2/dx^2 with v = 0: integral of -(1/2pi) int xi^2 e^{-t xi^2} = -(sqrt(pi)/2) t^{-3/2}
  ThetaOperator d2;
  d2.order = 2;
  const auto b2 = heat_coefficients(FourierSeries{}, 2, d2);
  CHECK(b2[0].sqrt_pi_multiple == GR(Rational(-1, 2)));
  CHECK(b2[0].t_exponent == -1.5);
}

TEST_CASE("Volterra correction") {
  const ApproximateHeatKernel free_kn(FourierSeries{}, 4);
  const VolterraResult z = volterra_correct(free_kn, 0.05, 1.0, 1.0);
  CHECK(z.corrections.size() == 2);
  CHECK(z.corrections[1] == cplx(0.0));

  const FourierSeries v = parse_potential("sin");
  const ApproximateHeatKernel kn(v, 4);
  const SpectralHeatOracle o(v, 128);
  const double x = 1.0;
  const VolterraResult r = volterra_correct(kn, 0.05, x, x);
  CHECK(r.converged);
  const double ref = o.diagonal(0.05, x);
  CHECK(std::abs(r.value - ref) < std::abs(kn.value(0.05, x, x) - ref));

  std::vector<double> mags;
  for (double t : {0.1, 0.05, 0.025}) mags.push_back(std::abs(volterra_correct(kn, t, x, x).corrections[1]));
  const double expected = std::pow(2.0, 2.5);
  for (int i = 0; i < 2; ++i) {
    const double ratio = mags[i] / mags[i + 1];
    CHECK(ratio >= expected / 2.0);
    CHECK(ratio <= expected * 2.0);
  }
  VolterraOptions two;
  two.k_max = 2;
  two.nodes = 8;
  two.chain_grid = 128;
  const VolterraResult r2 = volterra_correct(kn, 0.1, x, x, two);
  CHECK(std::abs(r2.corrections[2]) < std::abs(r2.corrections[1]));
  CHECK_THROWS_AS(volterra_correct(kn, 0.1, x, x, VolterraOptions{4, 16, 1024, 256}), std::invalid_argument);
}

TEST_CASE("kernel grids and symmetry") {
  const FourierSeries v = parse_potential("sin");
  const ApproximateHeatKernel kn(v, 4);
  const std::vector<double> xs = {0.0, 1.0, 2.5, 4.0};
  const HeatKernel1D g = parametrix_kernel_grid(kn, {0.01, 0.1}, xs, xs);
  CHECK(g.values.size() == 2 * 4 * 4);
  CHECK(g.at(1, 2, 3) == kn.value(0.1, 2.5, 4.0));
  CHECK(g.symmetry_defect() <= 1e-3);
  const SpectralHeatOracle o(v, 64);
  const HeatKernel1D og = oracle_kernel_grid(o, {0.1}, xs, xs);
  CHECK(og.symmetry_defect() <= 1e-12);
  CHECK(og.to_json()["source"] == "spectral_oracle");
}

TEST_CASE("parametrix report") {
  ParametrixReportOptions opts;
  const ExperimentReport rep = heat_parametrix_report(parse_potential("sin"), "sin", 4, opts);
  CHECK_FALSE(rep.partial);
  CHECK(rep.all_pass());
  CHECK(rep.summary["remainder_exponent"].get<double>() == doctest::Approx(1.5).epsilon(0.2));
  CHECK(rep.to_json(false)["experiment"] == "heat_parametrix");
  CHECK(heat_parametrix_report(parse_potential("sin"), "sin", 3, opts).all_pass());
  const ExperimentReport bad = heat_parametrix_report(parse_potential("sin"), "sin", 12, opts);
  CHECK(bad.partial);
}
