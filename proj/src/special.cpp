#include "sdet/special.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/bernoulli.hpp>
#include <boost/math/special_functions/factorials.hpp>

namespace sdet {

namespace {

bool nonpositive_integer(cplx z) { return z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::round(z.real()); }

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

cplx lanczos_log_gamma_right(cplx z) {
  // valid for Re z >= 0.5
  z -= 1.0;
  cplx x = kLanczos[0];
  for (std::size_t i = 1; i < kLanczos.size(); ++i) x += kLanczos[i] / (z + static_cast<double>(i));
  const cplx t = z + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * M_PI) + (z + 0.5) * std::log(t) - t + std::log(x);
}

Dual lanczos_log_gamma_right(Dual z) {
  z = z + cplx(-1.0);
  Dual x = Dual::constant(kLanczos[0]);
  for (std::size_t i = 1; i < kLanczos.size(); ++i)
    x = x + Dual::constant(kLanczos[i]) / (z + cplx(static_cast<double>(i)));
  const Dual t = z + cplx(kLanczosG + 0.5);
  return Dual::constant(0.5 * std::log(2.0 * M_PI)) + (z + cplx(0.5)) * log(t) - t + log(x);
}

}  // namespace

cplx log_gamma(cplx z) {
  if (z.real() >= 0.5) return lanczos_log_gamma_right(z);
  if (nonpositive_integer(z)) throw std::domain_error("log_gamma: pole at nonpositive integer");
  const cplx s = std::sin(M_PI * z);
  return std::log(M_PI) - std::log(s) - lanczos_log_gamma_right(1.0 - z);
}

cplx gamma(cplx z) {
  if (z.real() >= 0.5) return std::exp(lanczos_log_gamma_right(z));
  if (nonpositive_integer(z)) throw std::domain_error("gamma: pole at nonpositive integer");
  const cplx s = std::sin(M_PI * z);
  return M_PI / (s * std::exp(lanczos_log_gamma_right(1.0 - z)));
}

cplx rgamma(cplx z) {
  if (z.real() >= 0.5) return std::exp(-lanczos_log_gamma_right(z));
  if (nonpositive_integer(z)) return 0.0;
  return std::sin(M_PI * z) * std::exp(lanczos_log_gamma_right(1.0 - z)) / M_PI;
}

Dual rgamma(Dual z) {
  if (z.v.real() >= 0.5) return exp(-lanczos_log_gamma_right(z));
  // sin(pi z) Gamma(1 - z) / pi
  const Dual one_minus = Dual{1.0 - z.v, -z.d};
  return cplx(1.0 / M_PI) * (sin(cplx(M_PI) * z) * exp(lanczos_log_gamma_right(one_minus)));
}

HurwitzValue hurwitz_zeta(cplx s, double a) {
  if (!(a > 0.0)) throw std::domain_error("hurwitz_zeta: offset must be positive");
  if (s == cplx(1.0)) throw std::domain_error("hurwitz_zeta: pole at s = 1");
  const double mag = std::abs(s);
  // for Re s < 0 the partial sum and the x^(1-s) term cancel, so start the tail early
  const int n_terms = s.real() < 0.0 ? std::max(12, static_cast<int>(std::ceil(3.0 * mag)))
                                     : std::max(50, static_cast<int>(std::ceil(4.0 * mag)));
  const int order = std::max(8, static_cast<int>(std::ceil(mag / 2.0)) + 4);
  const Dual sd = Dual::variable(s);

  Dual sum = Dual::constant(0.0);
  for (int j = n_terms - 1; j >= 0; --j) sum = sum + pow_neg(static_cast<double>(j) + a, sd);

  const double x = n_terms + a;
  const Dual xs = pow_neg(x, sd);  // x^(-s)
  sum = sum + (x * xs) / (sd + cplx(-1.0));
  sum = sum + 0.5 * xs;

  Dual poch = sd;  // s (s+1) ... (s + 2k - 2)
  Dual xpow = (1.0 / x) * xs;  // x^(-s-2k+1) for k = 1
  double last = 0.0;
  for (int k = 1; k <= order + 1; ++k) {
    const double coef =
        boost::math::bernoulli_b2n<double>(k) / boost::math::factorial<double>(static_cast<unsigned>(2 * k));
    const Dual term = coef * (poch * xpow);
    if (k <= order) {
      sum = sum + term;
    } else {
      last = std::abs(term.v);
    }
    poch = poch * (sd + cplx(2.0 * k - 1.0)) * (sd + cplx(2.0 * k));
    xpow = (1.0 / (x * x)) * xpow;
  }
  return {sum.v, sum.d, 2.0 * last};
}

}  // namespace sdet
