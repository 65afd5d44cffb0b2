#pragma once

#include <complex>

#include "sdet/linalg.hpp"

namespace sdet {

// Forward-mode dual number over the complex field: value and first derivative.
struct Dual {
  cplx v;
  cplx d;

  static Dual variable(cplx x) { return {x, 1.0}; }
  static Dual constant(cplx x) { return {x, 0.0}; }
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) { return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)}; }
inline Dual operator*(cplx c, Dual a) { return {c * a.v, c * a.d}; }
inline Dual operator+(Dual a, cplx c) { return {a.v + c, a.d}; }
inline Dual exp(Dual a) {
  const cplx e = std::exp(a.v);
  return {e, e * a.d};
}
// base^(-s) for a positive real base
inline Dual pow_neg(double base, Dual s) {
  const double lb = std::log(base);
  const cplx e = std::exp(-s.v * lb);
  return {e, -lb * e * s.d};
}
// z^(-s) on the principal branch for complex z off the negative axis
inline Dual pow_neg(cplx z, Dual s) {
  const cplx lz = std::log(z);
  const cplx e = std::exp(-s.v * lz);
  return {e, -lz * e * s.d};
}

inline Dual log(Dual a) { return {std::log(a.v), a.d / a.v}; }
inline Dual sin(Dual a) { return {std::sin(a.v), std::cos(a.v) * a.d}; }

cplx log_gamma(cplx z);
cplx gamma(cplx z);
// 1/Gamma, entire; exactly zero at nonpositive integers.
cplx rgamma(cplx z);
Dual rgamma(Dual z);

struct HurwitzValue {
  cplx value;
  cplx derivative;  // d/ds
  double error_bound = 0.0;
};

// zeta(s, a) = sum_{j>=0} (j + a)^(-s), a > 0, continued to s != 1 by Euler-Maclaurin
// (tail start 50, 8 Bernoulli corrections, both raised for large |s|;
// the tail starts at 12 when Re s < 0).
HurwitzValue hurwitz_zeta(cplx s, double a);

}  // namespace sdet
