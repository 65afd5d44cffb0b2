#include "sdet/fourier.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace sdet {

Rational rational_from_decimal(const std::string& text) {
  std::size_t pos = 0;
  bool neg = false;
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) neg = text[pos++] == '-';
  boost::multiprecision::cpp_int digits = 0;
  int frac = 0;
  bool seen_digit = false, seen_point = false;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits = digits * 10 + (c - '0');
      if (seen_point) ++frac;
      seen_digit = true;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) throw std::invalid_argument("not a decimal number: '" + text + "'");
  int exponent = 0;
  if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
    std::size_t used = 0;
    exponent = std::stoi(text.substr(pos + 1), &used);
    pos += 1 + used;
  }
  if (pos != text.size()) throw std::invalid_argument("not a decimal number: '" + text + "'");
  exponent -= frac;
  Rational r = Rational(digits);
  const Rational ten = 10;
  for (int i = 0; i < std::abs(exponent); ++i) r = exponent > 0 ? Rational(r * ten) : Rational(r / ten);
  return neg ? Rational(-r) : r;
}

std::string to_string(const Rational& r) {
  const auto num = boost::multiprecision::numerator(r), den = boost::multiprecision::denominator(r);
  return den == 1 ? num.str() : num.str() + "/" + den.str();
}

Rational rational_from_string(const std::string& text) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) return rational_from_decimal(text);
  const boost::multiprecision::cpp_int num(text.substr(0, slash)), den(text.substr(slash + 1));
  if (den == 0) throw std::invalid_argument("zero denominator in '" + text + "'");
  return Rational(num, den);
}

cplx GaussianRational::to_cplx() const { return {re.convert_to<double>(), im.convert_to<double>()}; }

GaussianRational operator+(const GaussianRational& a, const GaussianRational& b) { return {a.re + b.re, a.im + b.im}; }
GaussianRational operator-(const GaussianRational& a, const GaussianRational& b) { return {a.re - b.re, a.im - b.im}; }
GaussianRational operator-(const GaussianRational& a) { return {-a.re, -a.im}; }
GaussianRational operator*(const GaussianRational& a, const GaussianRational& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
bool operator==(const GaussianRational& a, const GaussianRational& b) { return a.re == b.re && a.im == b.im; }

FourierSeries FourierSeries::constant(const GaussianRational& c) {
  FourierSeries f;
  f.set(0, c);
  return f;
}

FourierSeries FourierSeries::from_coefficients(const std::map<int, GaussianRational>& coeffs) {
  FourierSeries f;
  for (const auto& [k, c] : coeffs) {
    if (std::abs(k) > kMaxDegree)
      throw std::invalid_argument("Fourier mode " + std::to_string(k) + " above the supported degree");
    f.set(k, c);
  }
  return f;
}

void FourierSeries::set(int k, const GaussianRational& c) {
  if (c.is_zero()) {
    coeffs_.erase(k);
  } else {
    coeffs_[k] = c;
  }
}

GaussianRational FourierSeries::coefficient(int k) const {
  const auto it = coeffs_.find(k);
  return it == coeffs_.end() ? GaussianRational{} : it->second;
}

int FourierSeries::degree() const {
  int d = 0;
  for (const auto& kv : coeffs_) d = std::max(d, std::abs(kv.first));
  return d;
}

bool FourierSeries::is_real() const {
  for (const auto& [k, c] : coeffs_)
    if (!(coefficient(-k) == c.conj())) return false;
  return true;
}

FourierSeries FourierSeries::derivative() const {
  FourierSeries f;
  for (const auto& [k, c] : coeffs_) f.set(k, GaussianRational{0, k} * c);
  f.dropped_tail_ = dropped_tail_ * kMaxDegree;
  return f;
}

cplx FourierSeries::operator()(double x) const {
  cplx sum = 0.0;
  for (const auto& [k, c] : coeffs_) sum += c.to_cplx() * std::polar(1.0, k * x);
  return sum;
}

FourierSeries& FourierSeries::operator+=(const FourierSeries& o) {
  for (const auto& [k, c] : o.coeffs_) set(k, coefficient(k) + c);
  dropped_tail_ += o.dropped_tail_;
  return *this;
}

FourierSeries operator-(const FourierSeries& a, const FourierSeries& b) { return a + GaussianRational{-1} * b; }

FourierSeries operator*(const GaussianRational& c, const FourierSeries& a) {
  FourierSeries f;
  if (c.is_zero()) return f;
  for (const auto& [k, v] : a.coeffs_) f.set(k, c * v);
  f.dropped_tail_ = a.dropped_tail_ * std::abs(c.to_cplx());
  return f;
}

FourierSeries operator*(const FourierSeries& a, const FourierSeries& b) {
  std::map<int, GaussianRational> acc;
  double dropped = 0.0;
  for (const auto& [ka, ca] : a.coeffs_)
    for (const auto& [kb, cb] : b.coeffs_) {
      const GaussianRational p = ca * cb;
      if (std::abs(ka + kb) > FourierSeries::kMaxDegree) {
        dropped += std::abs(p.to_cplx());
        continue;
      }
      acc[ka + kb] = acc[ka + kb] + p;
    }
  FourierSeries f;
  for (const auto& [k, c] : acc) f.set(k, c);
  double l1a = 0.0, l1b = 0.0;
  for (const auto& kv : a.coeffs_) l1a += std::abs(kv.second.to_cplx());
  for (const auto& kv : b.coeffs_) l1b += std::abs(kv.second.to_cplx());
  f.dropped_tail_ = dropped + a.dropped_tail_ * (l1b + b.dropped_tail_) + b.dropped_tail_ * l1a;
  return f;
}

json FourierSeries::to_json() const {
  json j = json::object();
  for (const auto& [k, c] : coeffs_) j[std::to_string(k)] = {to_string(c.re), to_string(c.im)};
  return j;
}

FourierSeries FourierSeries::from_json(const json& j) {
  std::map<int, GaussianRational> coeffs;
  for (const auto& [key, val] : j.items()) {
    const int k = std::stoi(key);
    if (!val.is_array() || val.size() != 2) throw std::invalid_argument("Fourier coefficient needs [re, im]");
    auto part = [](const json& p) {
      return p.is_string() ? rational_from_string(p.get<std::string>()) : Rational(p.get<double>());
    };
    coeffs[k] = {part(val[0]), part(val[1])};
  }
  return from_coefficients(coeffs);
}

namespace {

// c * sin(kx) or c * cos(kx) added to coeffs
void add_trig(std::map<int, GaussianRational>& coeffs, const Rational& c, bool is_sin, int k) {
  if (k == 0) {
    if (!is_sin) coeffs[0] = coeffs[0] + GaussianRational{c};
    return;
  }
  const Rational half = c / 2;
  if (is_sin) {
    // sin = (e^{ikx} - e^{-ikx}) / 2i
    coeffs[k] = coeffs[k] + GaussianRational{0, -half};
    coeffs[-k] = coeffs[-k] + GaussianRational{0, half};
  } else {
    coeffs[k] = coeffs[k] + GaussianRational{half};
    coeffs[-k] = coeffs[-k] + GaussianRational{half};
  }
}

}  // namespace

FourierSeries parse_potential(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::tolower(c)));
  if (s.empty()) throw std::invalid_argument("empty potential");
  std::map<int, GaussianRational> coeffs;
  std::size_t pos = 0;
  while (pos < s.size()) {
    bool neg = false;
    if (s[pos] == '+' || s[pos] == '-') neg = s[pos++] == '-';
    std::size_t end = pos;
    while (end < s.size() && s[end] != '+' && s[end] != '-') {
      // keep exponent signs inside numbers like 1e-3
      if ((s[end] == 'e') && end + 1 < s.size() && (s[end + 1] == '-' || s[end + 1] == '+') && end > pos &&
          std::isdigit(static_cast<unsigned char>(s[end - 1])))
        ++end;
      ++end;
    }
    std::string term = s.substr(pos, end - pos);
    pos = end;
    if (term.empty()) throw std::invalid_argument("malformed potential '" + text + "'");
    const auto fpos = std::min(term.find("sin"), term.find("cos"));
    Rational c = 1;
    if (fpos == std::string::npos) {
      c = rational_from_decimal(term);
      if (neg) c = -c;
      add_trig(coeffs, c, false, 0);
      continue;
    }
    std::string num = term.substr(0, fpos);
    if (!num.empty() && num.back() == '*') num.pop_back();
    if (!num.empty()) c = rational_from_decimal(num);
    if (neg) c = -c;
    const bool is_sin = term.compare(fpos, 3, "sin") == 0;
    std::string arg = term.substr(fpos + 3);
    if (!arg.empty() && arg.front() == '(') {
      if (arg.back() != ')') throw std::invalid_argument("unbalanced parenthesis in potential '" + text + "'");
      arg = arg.substr(1, arg.size() - 2);
    }
    int k = 1;
    if (!arg.empty()) {
      if (arg.back() != 'x') throw std::invalid_argument("trig argument must be k*x in potential '" + text + "'");
      arg.pop_back();
      if (!arg.empty() && arg.back() == '*') arg.pop_back();
      if (!arg.empty()) {
        std::size_t used = 0;
        k = std::stoi(arg, &used);
        if (used != arg.size() || k < 0) throw std::invalid_argument("bad frequency in potential '" + text + "'");
      }
    }
    if (k > FourierSeries::kMaxDegree) throw std::invalid_argument("frequency above the supported degree");
    add_trig(coeffs, c, is_sin, k);
  }
  return FourierSeries::from_coefficients(coeffs);
}

}  // namespace sdet
