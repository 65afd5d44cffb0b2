#include "sdet/ruelle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace sdet {

namespace {

constexpr double kAbscissaMargin = 0.3;
constexpr double kCountLimit = 1e36;  // keep int128 arithmetic far from overflow

int128 abs128(int128 v) { return v < 0 ? -v : v; }

std::vector<int> divisors(int n) {
  std::vector<int> out;
  for (int d = 1; d <= n; ++d)
    if (n % d == 0) out.push_back(d);
  return out;
}

// log(1 - w) without cancellation for small w
cplx log1m(cplx w) {
  if (std::abs(w) >= 0.25) return std::log(1.0 - w);
  cplx sum = 0.0, power = w;
  for (int j = 1; j < 200; ++j) {
    const cplx term = power / static_cast<double>(j);
    sum -= term;
    if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
    power *= w;
  }
  return sum;
}

// elementary symmetric functions e_0..e_n
std::vector<cplx> elementary_symmetric(const std::vector<cplx>& x) {
  std::vector<cplx> e(x.size() + 1, 0.0);
  e[0] = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t k = i + 1; k >= 1; --k) e[k] += e[k - 1] * x[i];
  return e;
}

json count_json(int128 v) {
  if (abs128(v) < static_cast<int128>(1) << 62) return static_cast<long long>(v);
  return int128_to_string(v);
}

double spectral_radius(const std::vector<std::vector<int>>& m) {
  const int n = static_cast<int>(m.size());
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return Eigen::EigenSolver<Eigen::MatrixXd>(a, false).eigenvalues().cwiseAbs().maxCoeff();
}

bool is_primitive(const std::vector<std::vector<int>>& m) {
  const int n = static_cast<int>(m.size());
  // Wielandt: some power up to (n-1)^2 + 1 is strictly positive
  std::vector<std::vector<int>> p = m;
  for (int step = 1; step <= (n - 1) * (n - 1) + 1; ++step) {
    bool positive = true;
    for (const auto& row : p)
      for (int v : row) positive = positive && v > 0;
    if (positive) return true;
    std::vector<std::vector<int>> next(n, std::vector<int>(n, 0));
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < n; ++l)
        if (p[i][l])
          for (int j = 0; j < n; ++j)
            if (m[l][j]) next[i][j] = 1;
    p = std::move(next);
  }
  return false;
}

using CountVector = std::vector<int>;
using Poly = std::map<CountVector, int128>;

}  // namespace

std::string int128_to_string(int128 v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  std::string s;
  for (int128 u = abs128(v); u > 0; u /= 10) s.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
  if (neg) s.push_back('-');
  std::reverse(s.begin(), s.end());
  return s;
}

AbscissaError::AbscissaError(double required, double given)
    : std::domain_error("abscissa error: orbit sums need Re lambda > " + std::to_string(required) + ", got " +
                        std::to_string(given)),
      required_(required) {}

int mobius(int n) {
  if (n < 1) throw std::invalid_argument("mobius needs n >= 1");
  int result = 1;
  for (int p = 2; p * p <= n; ++p) {
    if (n % p) continue;
    n /= p;
    if (n % p == 0) return 0;
    result = -result;
  }
  return n > 1 ? -result : result;
}

OrbitCatalog OrbitCatalog::truncated(int n) const {
  if (n < 0 || n > n_max) throw std::invalid_argument("truncation length outside the catalog");
  OrbitCatalog out = *this;
  out.n_max = n;
  out.orbits.clear();
  for (const auto& o : orbits)
    if (o.word_length <= n) out.orbits.push_back(o);
  out.fixed_point_counts.resize(static_cast<std::size_t>(n) + 1);
  out.primitive_counts.resize(static_cast<std::size_t>(n) + 1);
  return out;
}

double cat_expanding_eigenvalue(const std::array<long, 4>& a) {
  if (a[0] * a[3] - a[1] * a[2] != 1) throw std::domain_error("cat map needs det A = 1");
  const double t = static_cast<double>(a[0] + a[3]);
  if (std::abs(t) <= 2.0) throw std::domain_error("cat map needs |tr A| > 2 (hyperbolic)");
  return (t + std::copysign(std::sqrt(t * t - 4.0), t)) / 2.0;
}

std::pair<int128, int128> collapse_fraction(const std::array<long, 4>& a, int n) {
  cat_expanding_eigenvalue(a);
  if (n < 1) throw std::invalid_argument("orbit length must be positive");
  const int128 tr = a[0] + a[3];
  int128 prev = 2, cur = tr;
  for (int i = 2; i <= n; ++i) {
    const int128 next = tr * cur - prev;
    prev = cur;
    cur = next;
  }
  // det(I - P) = 1 - tr P + det P for P = A^n, det P = 1
  const int128 alternating = 2 - cur;
  return {alternating, abs128(alternating)};
}

OrbitCatalog cat_map_catalog(const std::array<long, 4>& a, int n_max, double alpha) {
  const double mu = cat_expanding_eigenvalue(a);
  if (n_max < 1) throw std::invalid_argument("n_max must be positive");
  if (n_max * std::log(std::abs(mu)) > std::log(kCountLimit))
    throw std::invalid_argument("n_max too large for exact orbit counts");
  OrbitCatalog c;
  c.kind = GeneratorKind::cat_map;
  c.cat_matrix = a;
  c.alpha = alpha;
  c.n_max = n_max;
  c.has_poincare = true;
  c.growth_rate = std::log(std::abs(mu));
  c.count_constant = mu > 0 ? 1.0 : 4.0;
  c.fixed_point_counts.assign(static_cast<std::size_t>(n_max) + 1, 0);
  c.primitive_counts.assign(static_cast<std::size_t>(n_max) + 1, 0);
  const int128 tr = a[0] + a[3];
  int128 prev = 2, cur = tr;
  for (int n = 1; n <= n_max; ++n) {
    c.fixed_point_counts[static_cast<std::size_t>(n)] = abs128(2 - cur);
    const int128 next = tr * cur - prev;
    prev = cur;
    cur = next;
  }
  for (int n = 1; n <= n_max; ++n) {
    int128 sum = 0;
    for (int d : divisors(n)) sum += mobius(n / d) * c.fixed_point_counts[static_cast<std::size_t>(d)];
    if (sum % n != 0) throw std::logic_error("Mobius inversion left a remainder");
    c.primitive_counts[static_cast<std::size_t>(n)] = sum / n;
  }
  for (int n = 1; n <= n_max; ++n) {
    const std::vector<cplx> poincare = {std::pow(mu, n), std::pow(mu, -n)};
    for (int d : divisors(n)) {
      const int128 p = c.primitive_counts[static_cast<std::size_t>(d)];
      if (p == 0) continue;
      ClosedOrbit o;
      o.period = n;
      o.primitive_period = d;
      o.iterate = n / d;
      o.word_length = n;
      o.count = static_cast<double>(p);
      o.holonomy = std::polar(1.0, alpha * n);
      o.poincare = poincare;
      c.orbits.push_back(o);
    }
  }
  return c;
}

OrbitCatalog subshift_catalog(const std::vector<std::vector<int>>& m, const std::vector<double>& roof, int n_max,
                              double alpha) {
  const int states = static_cast<int>(m.size());
  if (states == 0) throw std::invalid_argument("transition matrix is empty");
  for (const auto& row : m) {
    if (static_cast<int>(row.size()) != states) throw std::invalid_argument("transition matrix must be square");
    for (int v : row)
      if (v != 0 && v != 1) throw std::invalid_argument("transition matrix entries must be 0 or 1");
  }
  if (static_cast<int>(roof.size()) != states) throw std::invalid_argument("roof needs one value per state");
  for (double r : roof)
    if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("roof values must be positive");
  if (n_max < 1) throw std::invalid_argument("n_max must be positive");

  OrbitCatalog c;
  c.kind = GeneratorKind::subshift;
  c.transitions = m;
  c.roof = roof;
  c.alpha = alpha;
  c.n_max = n_max;
  c.has_poincare = false;
  const double rho = spectral_radius(m);
  c.growth_rate = std::log(std::max(rho, 1.0));
  c.min_step_time = *std::min_element(roof.begin(), roof.end());
  c.count_constant = states;
  if (!is_primitive(m)) c.warnings.push_back("transition matrix is not primitive");
  if (std::log(static_cast<double>(states)) + n_max * c.growth_rate > std::log(kCountLimit))
    throw std::invalid_argument("n_max too large for exact orbit counts");

  // entries of (M diag(x))^n as polynomials in the state counts
  const CountVector zero(static_cast<std::size_t>(states), 0);
  std::vector<std::vector<Poly>> power(states, std::vector<Poly>(states));
  for (int i = 0; i < states; ++i)
    for (int j = 0; j < states; ++j)
      if (m[i][j]) {
        CountVector cv = zero;
        cv[static_cast<std::size_t>(j)] = 1;
        power[i][j][cv] = 1;
      }
  std::vector<Poly> closed(static_cast<std::size_t>(n_max) + 1);  // periodic points by count vector
  c.fixed_point_counts.assign(static_cast<std::size_t>(n_max) + 1, 0);
  for (int n = 1; n <= n_max; ++n) {
    if (n > 1) {
      std::vector<std::vector<Poly>> next(states, std::vector<Poly>(states));
      for (int i = 0; i < states; ++i)
        for (int l = 0; l < states; ++l)
          for (const auto& [cv, coeff] : power[i][l])
            for (int j = 0; j < states; ++j) {
              if (!m[l][j]) continue;
              CountVector nv = cv;
              ++nv[static_cast<std::size_t>(j)];
              next[i][j][nv] += coeff;
            }
      power = std::move(next);
    }
    for (int i = 0; i < states; ++i)
      for (const auto& [cv, coeff] : power[i][i]) closed[static_cast<std::size_t>(n)][cv] += coeff;
    for (const auto& [cv, coeff] : closed[static_cast<std::size_t>(n)])
      c.fixed_point_counts[static_cast<std::size_t>(n)] += coeff;
  }

  // primitive necklaces per (length, count vector): n P = sum_{e | gcd} mu(e) N(n/e, c/e)
  c.primitive_counts.assign(static_cast<std::size_t>(n_max) + 1, 0);
  for (int n = 1; n <= n_max; ++n) {
    for (const auto& [cv, total] : closed[static_cast<std::size_t>(n)]) {
      int g = n;
      for (int v : cv) g = std::gcd(g, v);
      int128 sum = 0;
      for (int e : divisors(g)) {
        const int mu_e = mobius(e);
        if (mu_e == 0) continue;
        CountVector reduced = cv;
        for (int& v : reduced) v /= e;
        const auto& bucket = closed[static_cast<std::size_t>(n / e)];
        const auto it = bucket.find(reduced);
        if (it != bucket.end()) sum += mu_e * it->second;
      }
      if (sum % n != 0) throw std::logic_error("necklace count left a remainder");
      const int128 classes = sum / n;
      if (classes == 0) continue;
      c.primitive_counts[static_cast<std::size_t>(n)] += classes;
      double prim_time = 0.0;
      for (int s = 0; s < states; ++s) prim_time += cv[static_cast<std::size_t>(s)] * roof[static_cast<std::size_t>(s)];
      for (int j = 1; j * n <= n_max; ++j) {
        ClosedOrbit o;
        o.period = j * prim_time;
        o.primitive_period = prim_time;
        o.iterate = j;
        o.word_length = j * n;
        o.count = static_cast<double>(classes);
        o.holonomy = std::polar(1.0, alpha * j * n);
        c.orbits.push_back(o);
      }
    }
  }
  return c;
}

std::vector<CombAtom> guillemin_comb(const OrbitCatalog& catalog, int k) {
  if (!catalog.has_poincare) throw UnsupportedOperation("Guillemin weights need Poincare data, which this catalog omits");
  const int dim = catalog.stable_dim + catalog.unstable_dim;
  if (k < 0 || k > dim) throw std::invalid_argument("form degree outside 0.." + std::to_string(dim));
  std::vector<CombAtom> atoms;
  atoms.reserve(catalog.orbits.size());
  for (const auto& o : catalog.orbits) {
    const std::vector<cplx> e = elementary_symmetric(o.poincare);
    cplx det = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) det += (j % 2 ? -1.0 : 1.0) * e[j];
    atoms.push_back({o.period, o.primitive_period * e[static_cast<std::size_t>(k)] * o.holonomy / std::abs(det) * o.count});
  }
  return atoms;
}

double truncation_tail_bound(const OrbitCatalog& catalog, cplx lambda) {
  const double q = std::exp(catalog.growth_rate - lambda.real() * catalog.min_step_time);
  if (q >= 1.0) return std::numeric_limits<double>::infinity();
  const int n = catalog.n_max + 1;
  return catalog.count_constant * std::pow(q, n) / (n * (1.0 - q));
}

void check_abscissa(const OrbitCatalog& catalog, cplx lambda) {
  const double required = catalog.abscissa() + kAbscissaMargin;
  if (!(lambda.real() > required)) throw AbscissaError(required, lambda.real());
}

OrbitSum orbit_log_sdet(const OrbitCatalog& catalog, cplx lambda) {
  check_abscissa(catalog, lambda);
  cplx sum = 0.0;
  if (catalog.has_poincare) {
    const int dim = catalog.stable_dim + catalog.unstable_dim;
    std::vector<std::vector<CombAtom>> combs;
    for (int k = 0; k <= dim; ++k) combs.push_back(guillemin_comb(catalog, k));
    for (std::size_t i = 0; i < catalog.orbits.size(); ++i) {
      const ClosedOrbit& o = catalog.orbits[i];
      cplx alternating = 0.0;
      for (int k = 0; k <= dim; ++k) alternating += (k % 2 ? -1.0 : 1.0) * combs[static_cast<std::size_t>(k)][i].weight;
      sum += alternating / o.period * std::exp(-lambda * o.period);
    }
  } else {
    // no Poincare data: the alternating sum collapses to (-1)^m per orbit
    const double sign = catalog.unstable_dim % 2 ? -1.0 : 1.0;
    for (const auto& o : catalog.orbits)
      sum += sign * o.count * (o.primitive_period / o.period) * o.holonomy * std::exp(-lambda * o.period);
  }
  return {-sum, truncation_tail_bound(catalog, lambda)};
}

OrbitSum ruelle_log_zeta_sum(const OrbitCatalog& catalog, cplx lambda) {
  check_abscissa(catalog, lambda);
  cplx sum = 0.0;
  for (const auto& o : catalog.orbits)
    sum -= o.count / o.iterate * o.holonomy * std::exp(-lambda * o.period);
  return {sum, truncation_tail_bound(catalog, lambda)};
}

ZetaTruncation ruelle_zeta_truncated(const OrbitCatalog& catalog, cplx lambda) {
  check_abscissa(catalog, lambda);
  cplx log_value = 0.0;
  for (const auto& o : catalog.orbits)
    if (o.iterate == 1) log_value += o.count * log1m(o.holonomy * std::exp(-lambda * o.period));
  return {std::exp(log_value), log_value, truncation_tail_bound(catalog, lambda)};
}

cplx zeta_closed_form_cat(const std::array<long, 4>& a, double alpha, cplx lambda) {
  const double mu = cat_expanding_eigenvalue(a);
  const cplx z = std::exp(cplx(0.0, alpha) - lambda);
  if (std::abs(1.0 - z) < 1e-10)
    throw SingularityError("singularity: e^{i alpha - lambda} = 1 is a double pole of the zeta continuation");
  return (1.0 - mu * z) * (1.0 - z / mu) / ((1.0 - z) * (1.0 - z));
}

cplx zeta_transfer_determinant(const std::vector<std::vector<int>>& m, const std::vector<double>& roof, double alpha,
                               cplx lambda, bool row_roof) {
  const int n = static_cast<int>(m.size());
  if (static_cast<int>(roof.size()) != n) throw std::invalid_argument("roof needs one value per state");
  Mat t(n, n);
  const cplx phase = std::polar(1.0, alpha);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(m[static_cast<std::size_t>(i)].size()) != n)
      throw std::invalid_argument("transition matrix must be square");
    for (int j = 0; j < n; ++j) {
      const double r = roof[static_cast<std::size_t>(row_roof ? i : j)];
      t(i, j) = static_cast<double>(m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) *
                (lambda == cplx(0.0) ? cplx(1.0) : std::exp(-lambda * r));
    }
  }
  return (Mat::Identity(n, n) - phase * t).determinant();
}

Dual F_k_dirichlet(const OrbitCatalog& catalog, int k, cplx lambda, cplx s) {
  check_abscissa(catalog, lambda);
  const std::vector<CombAtom> atoms = guillemin_comb(catalog, k);
  Dual sum = Dual::constant(0.0);
  for (const auto& atom : atoms) {
    const double lt = std::log(atom.time);
    const cplx base = atom.weight * std::exp(-lambda * atom.time) * std::exp((s - 1.0) * lt);
    sum = sum + Dual{base, base * lt};
  }
  return rgamma(Dual::variable(s)) * sum;
}

namespace {

cplx continuation_value(const OrbitCatalog& c, cplx lambda) {
  if (c.kind == GeneratorKind::cat_map) return zeta_closed_form_cat(c.cat_matrix, c.alpha, lambda);
  return zeta_transfer_determinant(c.transitions, c.roof, c.alpha, lambda);
}

json catalog_config(const OrbitCatalog& c) {
  json j = {{"alpha", c.alpha}, {"n_max", c.n_max}, {"abscissa", c.abscissa()}};
  if (c.kind == GeneratorKind::cat_map) {
    j["generator"] = "cat_map";
    j["matrix"] = std::vector<long>(c.cat_matrix.begin(), c.cat_matrix.end());
  } else {
    j["generator"] = "subshift";
    j["transitions"] = c.transitions;
    j["roof"] = c.roof;
  }
  return j;
}

}  // namespace

json catalog_summary_json(const OrbitCatalog& c) {
  json j = catalog_config(c);
  json fixed = json::array(), prim = json::array();
  for (int n = 1; n <= c.n_max; ++n) {
    fixed.push_back(count_json(c.fixed_point_counts[static_cast<std::size_t>(n)]));
    prim.push_back(count_json(c.primitive_counts[static_cast<std::size_t>(n)]));
  }
  j["fixed_point_counts"] = fixed;
  j["primitive_counts"] = prim;
  j["orbit_classes"] = c.orbits.size();
  j["poincare_data"] = c.has_poincare;
  j["warnings"] = c.warnings;
  return j;
}

ExperimentReport ruelle_lambda_report(const OrbitCatalog& catalog, const std::vector<double>& lambdas) {
  ExperimentReport rep;
  rep.experiment = "ruelle";
  rep.config = catalog_config(catalog);
  rep.config["lambda_grid"] = lambdas;
  const double m_sign = catalog.unstable_dim % 2 ? -1.0 : 1.0;
  double max_product_sum = 0.0, max_identity = 0.0, max_cont = 0.0, product_tol = 1e-10;
  bool cont_pass = true;
  int truncated_rows = 0;
  for (double lam : lambdas) {
    ReportRow row;
    row.label = "lambda=" + std::to_string(lam);
    row.inputs = {{"lambda", lam}};
    const bool in_range = lam > catalog.abscissa() + kAbscissaMargin;
    cplx cont;
    bool singular = false;
    try {
      cont = continuation_value(catalog, lam);
    } catch (const SingularityError&) {
      singular = true;
    }
    if (in_range) {
      ++truncated_rows;
      const ZetaTruncation z = ruelle_zeta_truncated(catalog, lam);
      const OrbitSum ls = orbit_log_sdet(catalog, lam);
      const OrbitSum lz = ruelle_log_zeta_sum(catalog, lam);
      max_product_sum = std::max(max_product_sum, std::abs(z.log_value - lz.value));
      product_tol = std::max(product_tol, 1e-10 + 2.0 * z.tail_bound);
      max_identity = std::max(max_identity, std::abs(std::exp(ls.value) * std::pow(z.value, -m_sign) - 1.0));
      row.computed = {{"lambda", lam},
                      {"zeta", complex_to_json(z.value)},
                      {"log_sdet", complex_to_json(ls.value)},
                      {"tail_bound", z.tail_bound},
                      {"region", "orbit_sum"}};
      if (!singular) {
        row.reference = {{"zeta", complex_to_json(cont)}};
        row.provenance = Provenance::derived_oracle;
        row.abs_error = std::abs(z.value - cont);
        row.rel_error = row.abs_error / std::max(std::abs(cont), 1e-300);
        row.tolerance = 1e-8 + std::abs(cont) * std::expm1(z.tail_bound);
        row.pass = row.abs_error <= row.tolerance;
        max_cont = std::max(max_cont, row.abs_error);
        cont_pass = cont_pass && row.pass;
      }
    } else {
      row.computed = {{"lambda", lam}, {"region", "continuation"}, {"tail_bound", nullptr}};
      if (singular) {
        row.computed["zeta"] = nullptr;
        row.computed["log_sdet"] = nullptr;
        row.computed["singular"] = true;
      } else {
        row.computed["zeta"] = complex_to_json(cont);
        row.computed["log_sdet"] = complex_to_json(m_sign * std::log(cont));
      }
      row.provenance = Provenance::trivial;
    }
    rep.rows.push_back(std::move(row));
  }
  if (truncated_rows > 0) {
    rep.add_verdict("product_sum", max_product_sum, product_tol, "|log Euler product - orbit sum|");
    rep.add_verdict("sdet_zeta_identity", max_identity, 1e-8, "|exp(log sdet) zeta^(-(-1)^m) - 1|");
    Verdict v{"continuation", cont_pass, max_cont, 1e-8, "truncated zeta vs continuation"};
    rep.verdicts.push_back(v);
  }
  json at_zero = nullptr;
  bool regular = false;
  try {
    const cplx z0 = continuation_value(catalog, 0.0);
    at_zero = complex_to_json(z0);
    regular = std::isfinite(std::abs(z0)) && std::abs(z0) > 1e-12;
  } catch (const SingularityError&) {
  }
  rep.summary = {{"zeta_at_zero", at_zero}, {"regular_at_zero", regular}, {"truncated_rows", truncated_rows}};
  return rep;
}

ExperimentReport roof_constancy_report(const std::vector<std::vector<int>>& m,
                                       const std::vector<std::vector<double>>& roofs, double alpha) {
  if (roofs.empty()) throw std::invalid_argument("roof list is empty");
  ExperimentReport rep;
  rep.experiment = "ruelle_roof_constancy";
  rep.config = {{"transitions", m}, {"roofs", roofs}, {"alpha", alpha}};
  const cplx first = zeta_transfer_determinant(m, roofs.front(), alpha, 0.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < roofs.size(); ++i) {
    const cplx v = zeta_transfer_determinant(m, roofs[i], alpha, 0.0);
    ReportRow row;
    row.label = "roof " + std::to_string(i);
    row.inputs = {{"roof", roofs[i]}};
    row.computed = {{"zeta_at_zero", complex_to_json(v)}};
    row.reference = {{"zeta_at_zero", complex_to_json(first)}};
    row.provenance = Provenance::internal_crosscheck;
    row.abs_error = std::abs(v - first);
    row.rel_error = row.abs_error / std::max(std::abs(first), 1e-300);
    row.tolerance = 1e-15;
    row.pass = row.abs_error <= row.tolerance;
    worst = std::max(worst, row.abs_error);
    rep.rows.push_back(std::move(row));
  }
  rep.add_verdict("roof_independence", worst, 1e-15, "max deviation of zeta(0) across roofs");
  rep.summary = {{"zeta_at_zero", complex_to_json(first)},
                 {"regular_at_zero", std::abs(first) > 1e-12},
                 {"sdet_at_zero", complex_to_json(1.0 / first)}};
  return rep;
}

}  // namespace sdet
