#pragma once

#include <map>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "sdet/report.hpp"

namespace sdet {

using Rational = boost::multiprecision::cpp_rational;

Rational rational_from_decimal(const std::string& text);
std::string to_string(const Rational& r);
Rational rational_from_string(const std::string& text);

// a + b i with rational a, b
struct GaussianRational {
  Rational re;
  Rational im;

  GaussianRational() = default;
  GaussianRational(Rational r, Rational i = 0) : re(std::move(r)), im(std::move(i)) {}
  static GaussianRational i_unit() { return {0, 1}; }

  bool is_zero() const { return re == 0 && im == 0; }
  GaussianRational conj() const { return {re, -im}; }
  cplx to_cplx() const;
};

GaussianRational operator+(const GaussianRational& a, const GaussianRational& b);
GaussianRational operator-(const GaussianRational& a, const GaussianRational& b);
GaussianRational operator-(const GaussianRational& a);
GaussianRational operator*(const GaussianRational& a, const GaussianRational& b);
bool operator==(const GaussianRational& a, const GaussianRational& b);

// Trigonometric polynomial sum_k c_k e^{ikx} with exact coefficients.
// Products drop modes above kMaxDegree and accumulate their l1 norm.
class FourierSeries {
 public:
  static constexpr int kMaxDegree = 16;

  FourierSeries() = default;
  static FourierSeries constant(const GaussianRational& c);
  static FourierSeries from_coefficients(const std::map<int, GaussianRational>& coeffs);

  const std::map<int, GaussianRational>& coefficients() const { return coeffs_; }
  GaussianRational coefficient(int k) const;
  GaussianRational mean() const { return coefficient(0); }
  double dropped_tail() const { return dropped_tail_; }
  int degree() const;
  bool is_zero() const { return coeffs_.empty(); }
  bool is_real() const;

  FourierSeries derivative() const;
  cplx operator()(double x) const;

  FourierSeries& operator+=(const FourierSeries& o);
  friend FourierSeries operator+(FourierSeries a, const FourierSeries& b) { return a += b; }
  friend FourierSeries operator-(const FourierSeries& a, const FourierSeries& b);
  friend FourierSeries operator*(const FourierSeries& a, const FourierSeries& b);
  friend FourierSeries operator*(const GaussianRational& c, const FourierSeries& a);
  friend bool operator==(const FourierSeries& a, const FourierSeries& b) { return a.coeffs_ == b.coeffs_; }

  json to_json() const;
  static FourierSeries from_json(const json& j);

 private:
  void set(int k, const GaussianRational& c);

  std::map<int, GaussianRational> coeffs_;
  double dropped_tail_ = 0.0;
};

// Real trigonometric polynomial from text like "sin", "1 + sin x", "0.5*cos(2x) - 3".
FourierSeries parse_potential(const std::string& text);

}  // namespace sdet
