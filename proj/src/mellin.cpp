#include "sdet/mellin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "sdet/report.hpp"

namespace sdet {

namespace {

constexpr int kMaxTailTerms = 10'000'000;

double degree_weight(int k) { return (k % 2 == 0 ? -1.0 : 1.0) * k; }

void validate_tail(const PowerTail& t) {
  if (!(t.scale > 0.0) || !(t.power > 0.0) || t.offset < 0.0 || t.start < 0 || t.multiplicity < 1)
    throw std::invalid_argument("power tail needs scale > 0, power > 0, offset >= 0, start >= 0, multiplicity >= 1");
}

double tail_eig(const PowerTail& t, long j) { return t.scale * std::pow(static_cast<double>(j) + t.first_base(), t.power); }

// exp(-t lambda_j) summed until negligible, plus an integral bound on the rest
std::pair<double, double> tail_heat(const PowerTail& tail, double t) {
  double sum = 0.0;
  long j = 0;
  for (; j < kMaxTailTerms; ++j) {
    const double term = std::exp(-t * tail_eig(tail, j));
    sum += term;
    if (term <= 1e-18 * sum) break;
  }
  // sum_{i > j} e^{-t c (i+b)^p} <= int_{j+b}^inf e^{-t c y^p} dy
  const double tc = t * tail.scale;
  const double inv = 1.0 / tail.power;
  const double x = tc * std::pow(static_cast<double>(j) + tail.first_base(), tail.power);
  const double bound = std::pow(tc, -inv) * inv * boost::math::tgamma(inv) * boost::math::gamma_q(inv, x);
  return {tail.multiplicity * sum, tail.multiplicity * bound};
}

Dual binomial_neg(Dual s, int m) {
  // binom(-s, m)
  Dual b = Dual::constant(1.0);
  for (int i = 0; i < m; ++i) b = (1.0 / (i + 1.0)) * (b * (-s + cplx(-static_cast<double>(i))));
  return b;
}

Dual tail_zeta(const PowerTail& tail, Dual s, cplx shift) {
  const double c = tail.scale;
  double base = tail.first_base();
  Dual sum = Dual::constant(0.0);
  if (shift != cplx(0.0)) {
    // peel off the low modes until the binomial series converges fast
    long peeled = 0;
    while (std::abs(shift) > 0.5 * c * std::pow(base, tail.power)) {
      const cplx lam = c * std::pow(base, tail.power) + shift;
      if (lam.real() <= 0.0) throw std::domain_error("spectral zeta: Re(lambda_j + shift) must be positive");
      sum = sum + pow_neg(lam, s);
      base += 1.0;
      if (++peeled > 1'000'000) throw UnsupportedTail("spectral zeta: shift too large for the binomial continuation");
    }
  } else if (base == 0.0) {
    throw std::domain_error("spectral zeta: zero eigenvalue in tail");
  }
  Dual series = Dual::constant(0.0);
  cplx shift_pow = 1.0;
  for (int m = 0; m < 400; ++m) {
    const Dual arg = cplx(tail.power) * (s + cplx(static_cast<double>(m)));
    if (std::abs(arg.v - 1.0) < 1e-10)
      throw UnsupportedTail("spectral zeta: tail continuation hits the Hurwitz pole");
    const HurwitzValue hz = hurwitz_zeta(arg.v, base);
    const Dual zeta{hz.value, hz.derivative * arg.d};
    const Dual term = shift_pow * (binomial_neg(s, m) * pow_neg(c, s + cplx(static_cast<double>(m))) * zeta);
    series = series + term;
    if (shift == cplx(0.0)) break;
    if (m >= 3 && std::abs(term.v) <= 1e-17 * std::abs(series.v) && std::abs(term.d) <= 1e-17 * std::abs(series.d) + 1e-300)
      break;
    shift_pow *= shift;
  }
  return cplx(static_cast<double>(tail.multiplicity)) * (sum + series);
}

double smoothstep(double x) {
  // C-infinity step, 0 at x <= 0 and 1 at x >= 1
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

double smoothstep_derivative(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  const double da = a / (x * x), db = -b / ((1.0 - x) * (1.0 - x));
  return (da * b - a * db) / ((a + b) * (a + b));
}

double step(CutoffProfile p, double x) {
  if (p == CutoffProfile::smooth) return smoothstep(x);
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return 0.5 * (1.0 - std::cos(M_PI * x));
}

double step_derivative(CutoffProfile p, double x) {
  if (p == CutoffProfile::smooth) return smoothstep_derivative(x);
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return 0.5 * M_PI * std::sin(M_PI * x);
}

double min_decay(const SpectrumByDegree& spec, cplx lambda) {
  double r = std::numeric_limits<double>::infinity();
  for (int k = 0; k < spec.degree_count(); ++k) {
    if (degree_weight(k) == 0.0) continue;
    for (const auto& e : spec.degree(k).eigs) r = std::min(r, (e.value + lambda).real());
    for (const auto& t : spec.degree(k).tails) r = std::min(r, tail_eig(t, 0) + lambda.real());
  }
  return r;
}

}  // namespace

SpectrumByDegree::SpectrumByDegree(std::vector<DegreeSpectrum> degrees) : degrees_(std::move(degrees)) {
  if (degrees_.empty()) throw std::invalid_argument("spectrum needs at least one degree");
  for (auto& d : degrees_) {
    for (const auto& e : d.eigs) {
      if (!(e.value.real() > 0.0)) throw std::invalid_argument("eigenvalues must have positive real part");
      if (e.multiplicity < 1) throw std::invalid_argument("multiplicities must be positive");
    }
    std::stable_sort(d.eigs.begin(), d.eigs.end(),
                     [](const Eigenvalue& a, const Eigenvalue& b) { return a.value.real() < b.value.real(); });
    for (const auto& t : d.tails) validate_tail(t);
  }
}

bool SpectrumByDegree::finite() const {
  return std::all_of(degrees_.begin(), degrees_.end(), [](const DegreeSpectrum& d) { return d.tails.empty(); });
}

SpectrumByDegree SpectrumByDegree::single(int degree, int degree_count, cplx value) {
  if (degree < 0 || degree >= degree_count) throw std::invalid_argument("degree out of range");
  std::vector<DegreeSpectrum> d(static_cast<std::size_t>(degree_count));
  d[static_cast<std::size_t>(degree)].eigs.push_back({value, 1});
  return SpectrumByDegree(std::move(d));
}

SpectrumByDegree SpectrumByDegree::twisted_circle(double theta, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  const double turns = theta / (2.0 * M_PI);
  const double a = turns - std::floor(turns);
  const double scale = 1.0 / (radius * radius);
  DegreeSpectrum d;
  // n >= 0 gives (n + a)^2, n < 0 gives (m + 1 - a)^2 for m >= 0
  d.tails.push_back({scale, a, 2.0, 0, 1});
  d.tails.push_back({scale, 1.0 - a, 2.0, 0, 1});
  return SpectrumByDegree({d, d});
}

json spectrum_to_json(const SpectrumByDegree& spec) {
  json degrees = json::array();
  for (int k = 0; k < spec.degree_count(); ++k) {
    const auto& d = spec.degree(k);
    json eigs = json::array(), mults = json::array(), tails = json::array();
    for (const auto& e : d.eigs) {
      eigs.push_back(complex_to_json(e.value));
      mults.push_back(e.multiplicity);
    }
    for (const auto& t : d.tails)
      tails.push_back({{"type", "power"},
                       {"scale", t.scale},
                       {"offset", t.offset},
                       {"power", t.power},
                       {"start", t.start},
                       {"mult", t.multiplicity}});
    json jd = {{"eigs", eigs}, {"mults", mults}};
    if (!tails.empty()) jd["tail"] = tails;
    degrees.push_back(jd);
  }
  return {{"degrees", degrees}};
}

namespace {
PowerTail tail_from_json(const json& j) {
  const std::string type = j.value("type", "power");
  if (type != "power") throw std::invalid_argument("unknown tail type '" + type + "'");
  const json& p = j.contains("params") ? j.at("params") : j;
  PowerTail t;
  t.scale = p.value("scale", 1.0);
  t.offset = p.value("offset", 1.0);
  t.power = p.value("power", 2.0);
  t.start = p.value("start", 0);
  t.multiplicity = p.value("mult", 1);
  return t;
}
}  // namespace

SpectrumByDegree spectrum_from_json(const json& j) {
  std::vector<DegreeSpectrum> degrees;
  for (const auto& jd : j.at("degrees")) {
    DegreeSpectrum d;
    const json eigs = jd.value("eigs", json::array());
    const json mults = jd.value("mults", json::array());
    if (!mults.empty() && mults.size() != eigs.size()) throw std::invalid_argument("mults and eigs differ in length");
    for (std::size_t i = 0; i < eigs.size(); ++i)
      d.eigs.push_back({complex_from_json(eigs[i]), mults.empty() ? 1 : mults[i].get<int>()});
    if (jd.contains("tail")) {
      const json& jt = jd.at("tail");
      if (jt.is_array()) {
        for (const auto& x : jt) d.tails.push_back(tail_from_json(x));
      } else {
        d.tails.push_back(tail_from_json(jt));
      }
    }
    degrees.push_back(std::move(d));
  }
  return SpectrumByDegree(std::move(degrees));
}

HeatTrace heat_trace(const SpectrumByDegree& spec, double t) {
  if (!(t > 0.0)) throw std::domain_error("heat trace needs t > 0");
  HeatTrace out;
  for (int k = 0; k < spec.degree_count(); ++k) {
    const auto& d = spec.degree(k);
    cplx v = 0.0;
    double bound = 0.0;
    for (const auto& e : d.eigs) v += static_cast<double>(e.multiplicity) * std::exp(-t * e.value);
    for (const auto& tail : d.tails) {
      const auto [s, b] = tail_heat(tail, t);
      v += s;
      bound += b;
    }
    out.values.push_back(v);
    out.tail_bound.push_back(bound);
  }
  return out;
}

cplx weighted_heat_supertrace(const SpectrumByDegree& spec, double t) {
  if (!(t > 0.0)) throw std::domain_error("heat trace needs t > 0");
  cplx sum = 0.0;
  for (int k = 0; k < spec.degree_count(); ++k) {
    const double w = degree_weight(k);
    if (w == 0.0) continue;
    const auto& d = spec.degree(k);
    cplx v = 0.0;
    for (const auto& e : d.eigs) v += static_cast<double>(e.multiplicity) * std::exp(-t * e.value);
    for (const auto& tail : d.tails) v += tail_heat(tail, t).first;
    sum += w * v;
  }
  return sum;
}

Dual degree_zeta(const DegreeSpectrum& deg, cplx s, cplx shift) {
  const Dual sd = Dual::variable(s);
  Dual sum = Dual::constant(0.0);
  for (const auto& e : deg.eigs) {
    const cplx lam = e.value + shift;
    if (!(lam.real() > 0.0)) throw std::domain_error("spectral zeta: Re(lambda_j + shift) must be positive");
    sum = sum + cplx(static_cast<double>(e.multiplicity)) * pow_neg(lam, sd);
  }
  for (const auto& t : deg.tails) sum = sum + tail_zeta(t, sd, shift);
  return sum;
}

cplx spectral_zeta(const SpectrumByDegree& spec, int degree, cplx s, cplx shift) {
  if (degree < 0 || degree >= spec.degree_count()) throw std::invalid_argument("degree out of range");
  return degree_zeta(spec.degree(degree), s, shift).v;
}

std::string to_string(CutoffProfile p) { return p == CutoffProfile::smooth ? "smooth" : "cosine"; }

CutoffProfile cutoff_profile_from_string(const std::string& name) {
  if (name == "smooth") return CutoffProfile::smooth;
  if (name == "cosine") return CutoffProfile::cosine;
  throw std::invalid_argument("unknown cutoff profile '" + name + "' (smooth|cosine)");
}

double CutoffSequence::operator()(double t) const {
  if (t <= 0.5 / n || t >= 2.0 * n) return 0.0;
  if (t < 1.0 / n) return step(profile, 2.0 * n * t - 1.0);
  if (t <= n) return 1.0;
  return 1.0 - step(profile, t / n - 1.0);
}

double CutoffSequence::derivative(double t) const {
  if (t <= 0.5 / n || t >= 2.0 * n) return 0.0;
  if (t < 1.0 / n) return 2.0 * n * step_derivative(profile, 2.0 * n * t - 1.0);
  if (t <= n) return 0.0;
  return -step_derivative(profile, t / n - 1.0) / n;
}

Dual F_closed_form(const SpectrumByDegree& spec, cplx lambda, cplx s) {
  Dual sum = Dual::constant(0.0);
  for (int k = 0; k < spec.degree_count(); ++k) {
    const double w = degree_weight(k);
    if (w == 0.0) continue;
    sum = sum + cplx(w) * degree_zeta(spec.degree(k), s, lambda);
  }
  return sum;
}

namespace {

// Integrand of the Mellin pairing in u = log t, with the flat part of chi_N kept separate
// so that doubling N only adds the new pieces.
class MellinIntegral {
 public:
  MellinIntegral(const SpectrumByDegree& spec, cplx lambda, cplx s, CutoffProfile profile)
      : spec_(spec), lambda_(lambda), s_(s), profile_(profile) {
    const double decay = min_decay(spec, lambda);
    if (!(decay > 0.0)) throw std::domain_error("Mellin pairing needs Re(lambda_j + lambda) > 0");
    // past t_cut the integrand t^(Re s) e^(-decay t) is below e^-45 of its scale
    double t = 45.0 / decay;
    for (int i = 0; i < 8; ++i) t = (45.0 + std::max(0.0, s.real()) * std::log(std::max(t, 1.0))) / decay;
    t_cut_ = std::max(t, 1.0);
  }

  // integral of t^(s-1) e^(-lambda t) h(t) over [a, b], no cutoff
  cplx flat(double a, double b) const {
    b = std::min(b, t_cut_);
    cplx total = 0.0;
    if (!(b > a)) return total;
    const double ua = std::log(a), ub = std::log(b);
    // unit-ish steps in u so the adaptive rule sees the decay
    for (double u = ua; u < ub; u += 2.0) total += piece(u, std::min(u + 2.0, ub), [](double) { return 1.0; });
    return total;
  }

  cplx ramps(double n) const {
    const CutoffSequence chi{n, profile_};
    cplx total = piece(std::log(0.5 / n), std::log(1.0 / n), chi);
    if (n < t_cut_) total += piece(std::log(n), std::log(std::min(2.0 * n, t_cut_)), chi);
    return total;
  }

 private:
  template <class Weight>
  cplx piece(double ua, double ub, const Weight& w) const {
    if (!(ub > ua)) return 0.0;
    auto f = [&](double u) -> cplx {
      const double t = std::exp(u);
      const double c = w(t);
      if (c == 0.0) return 0.0;
      return std::exp(s_ * u - lambda_ * t) * c * weighted_heat_supertrace(spec_, t);
    };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, ua, ub, 15, 1e-12);
  }

  const SpectrumByDegree& spec_;
  cplx lambda_, s_;
  CutoffProfile profile_;
  double t_cut_ = 0.0;
};

}  // namespace

cplx mellin_pairing(const SpectrumByDegree& spec, cplx lambda, cplx s, const CutoffSequence& chi) {
  const MellinIntegral m(spec, lambda, s, chi.profile);
  return (m.flat(1.0 / chi.n, chi.n) + m.ramps(chi.n)) * rgamma(s);
}

MellinResult F_numeric(const SpectrumByDegree& spec, cplx lambda, cplx s, const MellinOptions& opts) {
  const MellinIntegral m(spec, lambda, s, opts.profile);
  const cplx norm = rgamma(s);
  double n = opts.initial_n;
  cplx flat = m.flat(1.0 / n, n);
  cplx prev = (flat + m.ramps(n)) * norm;
  MellinResult r;
  for (;;) {
    flat += m.flat(0.5 / n, 1.0 / n) + m.flat(n, 2.0 * n);
    n *= 2.0;
    const cplx cur = (flat + m.ramps(n)) * norm;
    ++r.iterations;
    if (std::abs(cur - prev) <= opts.tolerance * std::max(1.0, std::abs(cur))) {
      r.value = cur;
      r.previous = prev;
      r.final_n = n;
      return r;
    }
    if (n >= opts.max_n)
      throw ConvergenceFailure("Mellin pairing did not converge in N at lambda = " + std::to_string(lambda.real()) +
                                   ", s = " + std::to_string(s.real()),
                               prev, cur);
    prev = cur;
  }
}

cplx log_sdet_via_zeta(const SpectrumByDegree& spec) {
  const double h = 1e-7;
  try {
    const Dual at0 = F_closed_form(spec, 0.0, 0.0);
    const cplx plus = F_closed_form(spec, 0.0, h).v, minus = F_closed_form(spec, 0.0, -h).v;
    // s F(s) must vanish at 0; a pole shows as a jump of order 1/h
    if (std::abs(h * plus) + std::abs(h * minus) > 1e-6 * (1.0 + std::abs(at0.v)))
      throw RegularityError("F has a pole at s = 0");
    return -at0.d;
  } catch (const UnsupportedTail& e) {
    throw RegularityError(std::string("F not regular at s = 0: ") + e.what());
  }
}

double circle_torsion(double theta, double radius) {
  const double turns = theta / (2.0 * M_PI);
  const double a = turns - std::floor(turns);
  if (a < 1e-12 || a > 1.0 - 1e-12) throw std::invalid_argument("holonomy in 2 pi Z: twisted circle is not acyclic");
  const cplx ls = log_sdet_via_zeta(SpectrumByDegree::twisted_circle(theta, radius));
  return std::exp(0.5 * ls.real());
}

}  // namespace sdet
