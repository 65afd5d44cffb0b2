#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sdet/mellin.hpp"
#include "sdet/special.hpp"

using namespace sdet;

namespace {

// Poisson summation: sum_{n in Z} exp(-t (n+a)^2) = sqrt(pi/t) sum_m exp(-pi^2 m^2 / t) cos(2 pi m a)
double theta_poisson(double t, double a) {
  double s = 1.0;
  for (int m = 1; m < 50; ++m) s += 2.0 * std::exp(-M_PI * M_PI * m * m / t) * std::cos(2.0 * M_PI * m * a);
  return std::sqrt(M_PI / t) * s;
}

// Direct partial sum from the small end, then the first Euler-Maclaurin tail terms.
cplx hurwitz_series(cplx s, double a) {
  const int n = 1'000'000;
  cplx sum = 0.0;
  for (int j = n - 1; j >= 0; --j) sum += std::exp(-s * std::log(j + a));
  const double x = n + a;
  const cplx xs = std::exp(-s * std::log(x));
  return sum + x * xs / (s - 1.0) + 0.5 * xs + s / 12.0 * xs / x;
}

SpectrumByDegree sample_finite() {
  std::vector<DegreeSpectrum> d(4);
  d[0].eigs = {{1.5, 1}, {4.0, 2}};
  d[1].eigs = {{1.5, 1}, {2.25, 1}, {{3.0, 0.5}, 1}, {4.0, 2}};
  d[2].eigs = {{2.25, 1}, {{3.0, 0.5}, 1}, {0.8, 3}};
  d[3].eigs = {{0.8, 3}};
  return SpectrumByDegree(d);
}

cplx closed_direct(const SpectrumByDegree& spec, cplx lambda, cplx s) {
  cplx sum = 0.0;
  for (int k = 0; k < spec.degree_count(); ++k) {
    const double w = (k % 2 == 0 ? -1.0 : 1.0) * k;
    for (const auto& e : spec.degree(k).eigs) sum += w * e.multiplicity * std::pow(e.value + lambda, -s);
  }
  return sum;
}

}  // namespace

TEST_CASE("gamma function") {
  for (double x : {0.3, 0.5, 1.0, 2.5, 7.25, -0.4, -1.7, -3.2})
    CHECK(std::abs(sdet::gamma(cplx(x)).real() - std::tgamma(x)) <= 1e-13 * std::abs(std::tgamma(x)));
  CHECK(rgamma(0.0) == cplx(0.0));
  CHECK(std::abs(rgamma(-2.0)) <= 1e-15);
  // |Gamma(iy)|^2 = pi / (y sinh(pi y))
  for (double y : {0.5, 1.0, 3.0}) {
    const double oracle = M_PI / (y * std::sinh(M_PI * y));
    CHECK(std::abs(std::norm(sdet::gamma(cplx(0.0, y))) - oracle) <= 1e-13 * oracle);
  }
  for (cplx z : {cplx(0.3, 1.2), cplx(-2.4, 0.7), cplx(5.0, -3.0)}) {
    const cplx lhs = sdet::gamma(z + 1.0), rhs = z * sdet::gamma(z);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(rhs));
    CHECK(std::abs(rgamma(z) * sdet::gamma(z) - 1.0) <= 1e-13);
  }
  CHECK_THROWS_AS(sdet::gamma(-3.0), std::domain_error);
}

TEST_CASE("Hurwitz zeta examples") {
  const HurwitzValue z2 = hurwitz_zeta(2.0, 0.5);
  CHECK(std::abs(z2.value - M_PI * M_PI / 2.0) <= 1e-13);
  CHECK(std::abs(hurwitz_zeta(0.0, 0.25).value - 0.25) <= 1e-14);
  for (double a : {0.1, 0.25, 0.5, 1.0, 3.7}) {
    CHECK(std::abs(hurwitz_zeta(0.0, a).value - (0.5 - a)) <= 1e-13);
    // Lerch: zeta'(0, a) = log Gamma(a) - log(2 pi) / 2
    CHECK(std::abs(hurwitz_zeta(0.0, a).derivative - (std::lgamma(a) - 0.5 * std::log(2.0 * M_PI))) <= 1e-12);
    // zeta(-1, a) = -B_2(a)/2, zeta(-2, a) = -B_3(a)/3
    CHECK(std::abs(hurwitz_zeta(-1.0, a).value + (a * a - a + 1.0 / 6.0) / 2.0) <= 1e-12);
    CHECK(std::abs(hurwitz_zeta(-2.0, a).value + (a * a * a - 1.5 * a * a + 0.5 * a) / 3.0) <= 1e-12);
  }
  CHECK_THROWS_AS(hurwitz_zeta(1.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(hurwitz_zeta(2.0, 0.0), std::domain_error);
}

TEST_CASE("Hurwitz zeta against a long direct series") {
  for (cplx s : {cplx(1.5), cplx(2.0), cplx(3.0), cplx(2.0, 3.0), cplx(4.5, -2.0)})
    for (double a : {0.25, 0.5, 1.0, 2.7}) {
      const cplx ref = hurwitz_series(s, a);
      const HurwitzValue h = hurwitz_zeta(s, a);
      CHECK(std::abs(h.value - ref) <= 1e-12);
      CHECK(h.error_bound <= 1e-13);
    }
}

TEST_CASE("Hurwitz derivative matches a central difference") {
  for (cplx s : {cplx(-0.5, 0.2), cplx(0.0), cplx(2.5, 1.0)}) {
    const double h = 1e-5;
    const cplx fd = (hurwitz_zeta(s + h, 0.3).value - hurwitz_zeta(s - h, 0.3).value) / (2.0 * h);
    CHECK(std::abs(hurwitz_zeta(s, 0.3).derivative - fd) <= 1e-8);
  }
}

TEST_CASE("heat trace examples") {
  const HeatTrace single = heat_trace(SpectrumByDegree::single(0, 1, 6.0), 1.0);
  CHECK(std::abs(single.values[0] - std::exp(-6.0)) <= 1e-16);

  const double t = 0.01;
  const HeatTrace tw = heat_trace(SpectrumByDegree::twisted_circle(M_PI, 1.0), t);
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(tw.values[static_cast<std::size_t>(k)] - theta_poisson(t, 0.5)) <= 1e-10);
    CHECK(tw.tail_bound[static_cast<std::size_t>(k)] <= 1e-12);
  }

  const HeatTrace free = heat_trace(SpectrumByDegree::twisted_circle(0.0, 1.0), t);
  CHECK(std::abs(free.values[0].real() - std::sqrt(M_PI / t)) <= 1e-10);
  CHECK(std::abs(free.values[0].real() - 17.7245385) <= 1e-7);

  CHECK_THROWS_AS(heat_trace(SpectrumByDegree::single(0, 1, 6.0), 0.0), std::domain_error);
}

TEST_CASE("heat trace tail bound dominates the neglected remainder") {
  // tail with slow decay so the bound is the dominant term
  DegreeSpectrum d;
  d.tails.push_back({1.0, 1.0, 1.0, 0, 2});
  const double t = 0.5;
  const HeatTrace h = heat_trace(SpectrumByDegree({d}), t);
  // geometric series 2 e^{-t} / (1 - e^{-t})
  const double exact = 2.0 * std::exp(-t) / (1.0 - std::exp(-t));
  CHECK(std::abs(h.values[0].real() - exact) <= 1e-13 * exact + h.tail_bound[0]);
  CHECK(h.tail_bound[0] < 1e-10);
}

TEST_CASE("spectral zeta examples") {
  CHECK(std::abs(spectral_zeta(SpectrumByDegree::single(0, 1, 4.0), 0, 2.0, 0.0) - 1.0 / 16.0) <= 1e-16);
  // shifted power tail at s = 2 against direct summation
  DegreeSpectrum d;
  d.tails.push_back({1.0, 0.5, 2.0, 0, 1});
  const SpectrumByDegree spec({d});
  const cplx shift(3.0, 1.0);
  cplx direct = 0.0;
  for (int j = 200000; j >= 0; --j) direct += std::pow((j + 0.5) * (j + 0.5) + shift, -2.0);
  CHECK(std::abs(spectral_zeta(spec, 0, 2.0, shift) - direct) <= 1e-13);
  CHECK_THROWS_AS(spectral_zeta(SpectrumByDegree::single(0, 1, 1.0), 0, 1.0, -2.0), std::domain_error);
}

TEST_CASE("unsupported tail continuation is reported") {
  DegreeSpectrum d;
  d.tails.push_back({1.0, 1.0, 2.0, 0, 1});
  // 2 s = 1 is the Hurwitz pole
  CHECK_THROWS_AS(spectral_zeta(SpectrumByDegree({d}), 0, 0.5, 0.0), UnsupportedTail);
}

TEST_CASE("shifted circle determinant") {
  // regularized prod_n ((n + a)^2 + mu^2) = 2 cosh(2 pi mu) - 2 cos(2 pi a)
  for (double a : {0.3, 0.5})
    for (double mu2 : {0.02, 0.7, 5.0}) {
      DegreeSpectrum d;
      d.tails.push_back({1.0, a, 2.0, 0, 1});
      d.tails.push_back({1.0, 1.0 - a, 2.0, 0, 1});
      const SpectrumByDegree spec({d, d});
      const cplx logdet = -F_closed_form(spec, mu2, 0.0).d;
      const double oracle = 2.0 * std::cosh(2.0 * M_PI * std::sqrt(mu2)) - 2.0 * std::cos(2.0 * M_PI * a);
      CHECK(std::abs(logdet - std::log(oracle)) <= 1e-10);
    }
}

TEST_CASE("F on the toy spectrum") {
  const SpectrumByDegree toy = SpectrumByDegree::single(1, 2, 6.0);
  const Dual f1 = F_closed_form(toy, 0.0, 1.0);
  CHECK(std::abs(f1.v - 1.0 / 6.0) <= 1e-16);
  CHECK(std::abs(log_sdet_via_zeta(toy) - std::log(6.0)) <= 1e-14);
}

TEST_CASE("log sdet on finite spectra equals the weighted log sum") {
  const SpectrumByDegree spec = sample_finite();
  cplx direct = 0.0;
  for (int k = 0; k < spec.degree_count(); ++k)
    for (const auto& e : spec.degree(k).eigs)
      direct += (k % 2 == 0 ? -1.0 : 1.0) * k * e.multiplicity * std::log(e.value);
  CHECK(std::abs(log_sdet_via_zeta(spec) - direct) <= 1e-12);
}

TEST_CASE("twisted circle log sdet") {
  CHECK(std::abs(log_sdet_via_zeta(SpectrumByDegree::twisted_circle(M_PI, 1.0)) - std::log(4.0)) <= 1e-12);
  CHECK(std::abs(log_sdet_via_zeta(SpectrumByDegree::twisted_circle(2.0 * M_PI / 3.0, 1.0)) - std::log(3.0)) <=
        1e-12);
}

TEST_CASE("circle torsion") {
  CHECK(circle_torsion(M_PI, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(circle_torsion(M_PI, 2.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(circle_torsion(2.0 * M_PI / 3.0, 1.0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
  for (double theta : {M_PI / 4.0, M_PI / 2.0, 2.0 * M_PI / 3.0, M_PI}) {
    const double base = circle_torsion(theta, 1.0);
    CHECK(std::abs(base - 2.0 * std::sin(theta / 2.0)) <= 1e-12);
    for (double r : {0.5, 2.0, 4.0}) CHECK(std::abs(circle_torsion(theta, r) - base) <= 1e-8);
  }
  CHECK_THROWS_AS(circle_torsion(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(circle_torsion(4.0 * M_PI, 1.0), std::invalid_argument);
}

TEST_CASE("cutoff sequence shape") {
  for (auto profile : {CutoffProfile::smooth, CutoffProfile::cosine}) {
    const CutoffSequence chi{64.0, profile};
    CHECK(chi(1.0 / 64.0) == 1.0);
    CHECK(chi(1.0) == 1.0);
    CHECK(chi(64.0) == 1.0);
    CHECK(chi(0.5 / 64.0) == 0.0);
    CHECK(chi(128.0) == 0.0);
    double max_low = 0.0, max_high = 0.0;
    for (int i = 1; i < 400; ++i) {
      const double lo = 0.5 / 64.0 + i * (0.5 / 64.0) / 400.0;
      const double hi = 64.0 + i * 64.0 / 400.0;
      for (double t : {lo, hi}) {
        CHECK(chi(t) >= 0.0);
        CHECK(chi(t) <= 1.0);
        const double h = 1e-7 * t;
        CHECK(std::abs(chi.derivative(t) - (chi(t + h) - chi(t - h)) / (2.0 * h)) <= 1e-5 * (1.0 + 64.0));
      }
      max_low = std::max(max_low, std::abs(chi.derivative(lo)));
      max_high = std::max(max_high, std::abs(chi.derivative(hi)));
    }
    // |chi'| <= C N below 1/N and <= C above N
    CHECK(max_low <= 5.0 * 64.0);
    CHECK(max_high <= 5.0);
  }
  CHECK_THROWS_AS(cutoff_profile_from_string("box"), std::invalid_argument);
}

TEST_CASE("Mellin path agrees with the closed form") {
  const SpectrumByDegree spec = sample_finite();
  for (cplx lambda : {cplx(0.0), cplx(0.5), cplx(1.0, 0.5), cplx(2.0), cplx(3.0, -1.0)})
    for (cplx s : {cplx(2.0), cplx(2.5), cplx(3.0, 0.5), cplx(3.5), cplx(4.0, -1.0)}) {
      const cplx a = F_closed_form(spec, lambda, s).v;
      CHECK(std::abs(a - closed_direct(spec, lambda, s)) <= 1e-13);
      const MellinResult b = F_numeric(spec, lambda, s);
      CHECK(std::abs(a - b.value) <= 1e-8);
    }
}

TEST_CASE("cutoff profile independence") {
  const SpectrumByDegree spec = sample_finite();
  for (cplx s : {cplx(2.0), cplx(3.0, 1.0)}) {
    const cplx a = F_numeric(spec, 0.5, s, {CutoffProfile::smooth}).value;
    const cplx b = F_numeric(spec, 0.5, s, {CutoffProfile::cosine}).value;
    CHECK(std::abs(a - b) <= 1e-8);
  }
}

TEST_CASE("Mellin convergence failure carries the iterates") {
  const SpectrumByDegree spec = sample_finite();
  MellinOptions opts;
  opts.max_n = 256.0;
  try {
    F_numeric(spec, 0.0, 0.6, opts);
    FAIL("expected a convergence failure");
  } catch (const ConvergenceFailure& e) {
    CHECK(std::abs(e.last_iterate - e.previous_iterate) > 0.0);
  }
}

TEST_CASE("spectrum JSON round trip") {
  const SpectrumByDegree spec = SpectrumByDegree::twisted_circle(1.0, 2.0);
  const SpectrumByDegree back = spectrum_from_json(spectrum_to_json(spec));
  CHECK(std::abs(log_sdet_via_zeta(back) - log_sdet_via_zeta(spec)) == 0.0);
  const json j = json::parse(R"({"degrees": [{"eigs": [[2, 0], [1, 1]], "mults": [1, 2]}, {"tail": {"type": "power", "params": {"scale": 1, "offset": 0.5, "power": 2}}}]})");
  const SpectrumByDegree s = spectrum_from_json(j);
  CHECK(s.degree(0).eigs[0].value == cplx(1.0, 1.0));
  CHECK(s.degree(1).tails.size() == 1);
  CHECK_THROWS_AS(spectrum_from_json(json::parse(R"({"degrees": [{"eigs": [[-1, 0]]}]})")), std::invalid_argument);
}
