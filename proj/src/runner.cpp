#include "sdet/runner.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sdet/fourier.hpp"
#include "sdet/graded.hpp"
#include "sdet/hodge.hpp"
#include "sdet/mellin.hpp"
#include "sdet/parallel.hpp"
#include "sdet/parametrix.hpp"
#include "sdet/random_complex.hpp"
#include "sdet/ruelle.hpp"
#include "sdet/twisted.hpp"

namespace sdet {

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids = {"finite-bv",       "hodge-anomaly", "circle-torsion",
                                               "heat-parametrix", "ruelle-cat",    "subshift-zeta"};
  return ids;
}

double parse_angle(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::tolower(c)));
  if (s.empty()) throw std::invalid_argument("empty angle");
  const auto pi_pos = s.find("pi");
  auto number = [&](const std::string& part, double fallback) {
    if (part.empty()) return fallback;
    if (part == "-") return -fallback;
    if (part == "+") return fallback;
    std::size_t used = 0;
    const double v = std::stod(part, &used);
    if (used != part.size()) throw std::invalid_argument("bad angle '" + text + "'");
    return v;
  };
  try {
    if (pi_pos == std::string::npos) return number(s, 0.0);
    std::string coeff = s.substr(0, pi_pos);
    if (!coeff.empty() && coeff.back() == '*') coeff.pop_back();
    double value = number(coeff, 1.0) * M_PI;
    std::string rest = s.substr(pi_pos + 2);
    if (!rest.empty()) {
      if (rest.front() != '/') throw std::invalid_argument("bad angle '" + text + "'");
      const double den = number(rest.substr(1), 0.0);
      if (den == 0.0) throw std::invalid_argument("zero denominator in angle '" + text + "'");
      value /= den;
    }
    return value;
  } catch (const std::logic_error&) {
    throw std::invalid_argument("bad angle '" + text + "'");
  }
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    std::size_t used = 0;
    try {
      parts.push_back(std::stod(item, &used));
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw std::invalid_argument("bad grid '" + text + "'");
  }
  if (parts.size() != 3) throw std::invalid_argument("grid must be start:stop:step, got '" + text + "'");
  const double start = parts[0], stop = parts[1], step = parts[2];
  if (!(step > 0.0) || stop < start) throw std::invalid_argument("grid needs step > 0 and stop >= start");
  const long n = std::lround(std::floor((stop - start) / step + 1e-9));
  if (n > 100000) throw std::invalid_argument("grid too long");
  std::vector<double> out;
  for (long i = 0; i <= n; ++i) out.push_back(start + static_cast<double>(i) * step);
  return out;
}

std::uint64_t case_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

// ---------------------------------------------------------------- config reading

class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_ + "." + key; }
  bool has(const std::string& key) const { return obj_.contains(key); }

  const json* take(const std::string& key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  long integer(const std::string& key, long def, long lo, long hi) {
    const json* j = take(key);
    if (!j) return def;
    if (!j->is_number_integer()) throw ConfigError(at(key), "expected an integer");
    const long v = j->get<long>();
    if (v < lo || v > hi)
      throw ConfigError(at(key), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
  }

  double number(const std::string& key, double def, double lo, double hi) {
    const json* j = take(key);
    if (!j) return def;
    if (!j->is_number()) throw ConfigError(at(key), "expected a number");
    return check_range(at(key), j->get<double>(), lo, hi);
  }

  bool boolean(const std::string& key, bool def) {
    const json* j = take(key);
    if (!j) return def;
    if (!j->is_boolean()) throw ConfigError(at(key), "expected true or false");
    return j->get<bool>();
  }

  std::string string(const std::string& key, const std::string& def, const std::vector<std::string>& choices = {}) {
    const json* j = take(key);
    if (!j) return def;
    if (!j->is_string()) throw ConfigError(at(key), "expected a string");
    const std::string v = j->get<std::string>();
    if (!choices.empty() && std::find(choices.begin(), choices.end(), v) == choices.end()) {
      std::string list;
      for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
      throw ConfigError(at(key), "must be one of " + list);
    }
    return v;
  }

  double angle(const std::string& key, double def) {
    const json* j = take(key);
    return j ? angle_value(*j, at(key)) : def;
  }

  std::vector<double> angles(const std::string& key, const std::vector<double>& def) {
    const json* j = take(key);
    if (!j) return def;
    if (!j->is_array() || j->empty()) throw ConfigError(at(key), "expected a nonempty list of angles");
    std::vector<double> out;
    for (std::size_t i = 0; i < j->size(); ++i)
      out.push_back(angle_value((*j)[i], at(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& def, double lo, double hi,
                              bool allow_empty = false) {
    const json* j = take(key);
    if (!j) return def;
    return number_list(*j, at(key), lo, hi, allow_empty);
  }

  // list of numbers or a "start:stop:step" string
  std::vector<double> grid(const std::string& key, const std::vector<double>& def, double lo, double hi) {
    const json* j = take(key);
    if (!j) return def;
    if (j->is_string()) {
      std::vector<double> g;
      try {
        g = parse_grid(j->get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(at(key), e.what());
      }
      for (std::size_t i = 0; i < g.size(); ++i) check_range(at(key) + "[" + std::to_string(i) + "]", g[i], lo, hi);
      return g;
    }
    return number_list(*j, at(key), lo, hi, true);
  }

  std::vector<std::vector<int>> int_matrix(const std::string& key, const std::vector<std::vector<int>>& def) {
    const json* j = take(key);
    if (!j) return def;
    if (!j->is_array() || j->empty()) throw ConfigError(at(key), "expected a nonempty list of rows");
    std::vector<std::vector<int>> out;
    for (std::size_t i = 0; i < j->size(); ++i) {
      const json& row = (*j)[i];
      const std::string p = at(key) + "[" + std::to_string(i) + "]";
      if (!row.is_array() || row.size() != j->size()) throw ConfigError(p, "rows must make a square matrix");
      std::vector<int> r;
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (!row[c].is_number_integer()) throw ConfigError(p + "[" + std::to_string(c) + "]", "expected an integer");
        r.push_back(row[c].get<int>());
      }
      out.push_back(r);
    }
    return out;
  }

  void finish(const std::string& what) const {
    for (const auto& [key, val] : obj_.items())
      if (!seen_.count(key)) throw ConfigError(at(key), "unknown key for " + what);
  }

  static double check_range(const std::string& path, double v, double lo, double hi) {
    if (!std::isfinite(v) || v < lo || v > hi) {
      std::ostringstream os;
      os << "must lie in [" << lo << ", " << hi << "]";
      throw ConfigError(path, os.str());
    }
    return v;
  }

  static std::vector<double> number_list(const json& j, const std::string& path, double lo, double hi,
                                         bool allow_empty) {
    if (!j.is_array() || (!allow_empty && j.empty())) throw ConfigError(path, "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      if (!j[i].is_number()) throw ConfigError(p, "expected a number");
      out.push_back(check_range(p, j[i].get<double>(), lo, hi));
    }
    return out;
  }

  static double angle_value(const json& j, const std::string& path) {
    if (j.is_number()) return j.get<double>();
    if (!j.is_string()) throw ConfigError(path, "expected an angle (number or string like \"2pi/3\")");
    try {
      return parse_angle(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path, e.what());
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> default_tau_grid() { return {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}; }

// pseudo-random roofs in [0.2, 3.2], reproducible from the seed
std::vector<std::vector<double>> generated_roofs(std::uint64_t seed, int families, int width) {
  std::vector<std::vector<double>> roofs;
  for (int f = 0; f < families; ++f) {
    std::vector<double> r;
    for (int s = 0; s < width; ++s) {
      const std::uint64_t z = case_seed(seed, static_cast<std::uint64_t>(f * width + s));
      r.push_back(0.2 + 3.0 * static_cast<double>(z >> 11) / 9007199254740992.0);
    }
    roofs.push_back(r);
  }
  return roofs;
}

json resolve_parameters(const std::string& exp, const json& raw, std::uint64_t seed) {
  static const json empty = json::object();
  Fields f(raw.is_null() ? empty : raw, "parameters");
  json p;
  if (exp == "finite-bv") {
    p["seeds"] = f.integer("seeds", 100, 1, 100000);
    p["tau_grid"] = f.numbers("tau_grid", default_tau_grid(), 0.0, 2.0);
    p["max_dim"] = f.integer("max_dim", 8, 1, 40);
    p["max_degrees"] = f.integer("max_degrees", 5, 2, 8);
    p["variation_scale"] = f.number("variation_scale", 0.4, 0.0, 2.0);
    p["trace_cases"] = f.integer("trace_cases", 20, 0, 100000);
    p["duhamel_cases"] = f.integer("duhamel_cases", 20, 0, 100000);
    if (p["tau_grid"].empty() || p["tau_grid"][0].get<double>() != 0.0)
      throw ConfigError("parameters.tau_grid", "must start at 0");
  } else if (exp == "hodge-anomaly") {
    p["families"] = f.integer("families", 20, 1, 100000);
    p["tau_max"] = f.number("tau_max", 1.0, 1e-6, 10.0);
    p["tau_points"] = f.integer("tau_points", 5, 2, 1000);
    p["scale"] = f.number("scale", 0.5, 0.0, 2.0);
    p["max_dim"] = f.integer("max_dim", 8, 1, 40);
  } else if (exp == "circle-torsion") {
    std::vector<double> thetas = {M_PI / 4.0, M_PI / 2.0, 2.0 * M_PI / 3.0, M_PI, 3.0};
    if (f.has("theta") && f.has("thetas")) throw ConfigError("parameters.theta", "give theta or thetas, not both");
    if (f.has("theta")) thetas = {f.angle("theta", M_PI)};
    thetas = f.angles("thetas", thetas);
    for (std::size_t i = 0; i < thetas.size(); ++i)
      if (std::abs(std::sin(thetas[i] / 2.0)) < 1e-8)
        throw ConfigError(f.at(f.has("theta") ? "theta" : "thetas[" + std::to_string(i) + "]"),
                          "trivial character: the twisted circle is not acyclic");
    p["thetas"] = thetas;
    p["radii"] = f.numbers("radii", {0.5, 1.0, 2.0, 4.0}, 1e-3, 1e3);
  } else if (exp == "heat-parametrix") {
    const std::string text = f.string("potential", "sin");
    try {
      const FourierSeries v = parse_potential(text);
      if (!v.is_real()) throw std::invalid_argument("potential must be real");
    } catch (const std::invalid_argument& e) {
      throw ConfigError("parameters.potential", e.what());
    }
    p["potential"] = text;
    p["N"] = f.integer("N", 4, 0, kMaxParametrixOrder);
    p["scheme"] = f.string("scheme", "principal", {"principal", "folded"});
    p["ts"] = f.numbers("ts", {}, 1e-6, 10.0, true);
    if (p["ts"].size() == 1) throw ConfigError("parameters.ts", "need at least two times for a slope");
    p["x_points"] = f.integer("x_points", 64, 4, 4096);
    p["volterra"] = f.boolean("volterra", true);
    p["volterra_t"] = f.number("volterra_t", 0.05, 1e-4, 1.0);
    p["k_max"] = f.integer("k_max", 1, 0, 3);
  } else if (exp == "ruelle-cat") {
    const json* m = f.take("matrix");
    std::vector<long> a = {2, 1, 1, 1};
    if (m) {
      if (!m->is_array() || m->size() != 4) throw ConfigError("parameters.matrix", "expected 4 integers a,b,c,d");
      for (std::size_t i = 0; i < 4; ++i) {
        if (!(*m)[i].is_number_integer())
          throw ConfigError("parameters.matrix[" + std::to_string(i) + "]", "expected an integer");
        a[i] = (*m)[i].get<long>();
      }
    }
    if (a[0] * a[3] - a[1] * a[2] != 1) throw ConfigError("parameters.matrix", "determinant must be 1");
    if (std::abs(a[0] + a[3]) <= 2) throw ConfigError("parameters.matrix", "not hyperbolic (|trace| <= 2)");
    p["matrix"] = a;
    p["alpha"] = f.angle("alpha", M_PI);
    p["n_max"] = f.integer("n_max", 60, 1, 200);
    std::vector<double> grid;
    for (int i = 0; i <= 18; ++i) grid.push_back(1.2 + 0.1 * i);
    p["lambda_grid"] = f.grid("lambda_grid", grid, -1e3, 1e3);
    p["collapse_n"] = f.integer("collapse_n", 30, 1, 60);
  } else if (exp == "subshift-zeta") {
    const auto m = f.int_matrix("transitions", {{1, 1}, {1, 0}});
    for (std::size_t i = 0; i < m.size(); ++i)
      for (std::size_t j = 0; j < m.size(); ++j)
        if (m[i][j] != 0 && m[i][j] != 1)
          throw ConfigError("parameters.transitions[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                            "entries must be 0 or 1");
    p["transitions"] = m;
    p["alpha"] = f.angle("alpha", M_PI);
    if (f.has("roofs") && f.has("families")) throw ConfigError("parameters.roofs", "give roofs or families, not both");
    const int families = static_cast<int>(f.integer("families", 10, 1, 10000));
    std::vector<std::vector<double>> roofs = generated_roofs(seed, families, static_cast<int>(m.size()));
    if (const json* r = f.take("roofs")) {
      if (!r->is_array() || r->empty()) throw ConfigError("parameters.roofs", "expected a nonempty list of roofs");
      roofs.clear();
      for (std::size_t i = 0; i < r->size(); ++i) {
        const std::string path = "parameters.roofs[" + std::to_string(i) + "]";
        auto row = Fields::number_list((*r)[i], path, 1e-6, 1e6, false);
        if (row.size() != m.size()) throw ConfigError(path, "one roof value per symbol");
        roofs.push_back(row);
      }
    }
    p["roofs"] = roofs;
    p["n_max"] = f.integer("n_max", 40, 1, 200);
    p["lambda_grid"] = f.grid("lambda_grid", {}, -1e3, 1e3);
  }
  f.finish(exp);
  return p;
}

const std::map<std::string, std::map<std::string, double>>& default_tolerances() {
  static const std::map<std::string, std::map<std::string, double>> t = {
      {"finite-bv", {{"exact_constancy", 1e-9}, {"anomaly_law", 1e-8}, {"restricted_trace", 1e-10}, {"duhamel", 1e-6}}},
      {"hodge-anomaly", {{"anomaly_ledger", 1e-8}, {"exact_constancy", 1e-9}, {"conjugation", 1e-10}}},
      {"circle-torsion", {{"closed_form", 1e-8}, {"radius_invariance", 1e-8}, {"cheeger_muller", 1e-8}}},
      {"heat-parametrix", {{"exponent_tolerance", 0.2}}},
      {"ruelle-cat",
       {{"product_sum", 1e-8}, {"sdet_zeta_identity", 1e-8}, {"continuation", 1e-8}, {"collapse_identity", 0.0}}},
      {"subshift-zeta", {{"roof_independence", 1e-15}, {"product_sum", 1e-8}, {"sdet_zeta_identity", 1e-8}}},
  };
  return t;
}

// ---------------------------------------------------------------- experiments

double verdict_value(const ExperimentReport& r, const std::string& name) {
  for (const auto& v : r.verdicts)
    if (v.name == name) return v.value;
  return 0.0;
}

struct FiniteCase {
  ReportRow row;
  bool partial = false;
  std::string failure;
};

ExperimentReport finite_bv(const json& p, std::uint64_t seed, const json& tol) {
  const int seeds = p["seeds"].get<int>();
  const auto grid = p["tau_grid"].get<std::vector<double>>();
  RandomComplexOptions rc;
  rc.max_dim = p["max_dim"].get<int>();
  rc.max_degrees = p["max_degrees"].get<int>();
  const double scale = p["variation_scale"].get<double>();
  const double tol_exact = tol["exact_constancy"], tol_anomaly = tol["anomaly_law"];

  const auto cases = parallel_map(static_cast<std::size_t>(seeds), [&](std::size_t i) {
    FiniteCase out;
    const std::uint64_t cs = case_seed(seed, i);
    ReportRow& row = out.row;
    row.label = "constancy";
    row.provenance = Provenance::derived_oracle;
    row.tolerance = tol_exact;
    try {
      const ComplexPair pair = random_acyclic_pair(cs, rc);
      row.inputs = {{"case", i}, {"seed", cs}, {"dims", pair.d.space().dims()}};
      Rng rng(cs ^ 0x5bd1e995ULL);
      const GradedMap theta = random_supertraceless(pair.d.space(), rng, scale);
      const ExperimentReport flat = constancy_report(
          pair.delta, pair.d, InnerVariation::constant(theta, InnerVariation::Mode::conjugator), grid);
      const GradedMap b1 = random_degree_preserving(pair.d.space(), rng, scale);
      const GradedMap b2 = random_degree_preserving(pair.d.space(), rng, scale / 4.0);
      const ExperimentReport general =
          constancy_report(pair.delta, pair.d, InnerVariation::polynomial_conjugator({b1, b2}), grid);
      const double dev = flat.summary["max_relative_deviation"].get<double>();
      const double anomaly = general.summary["max_anomaly_error"].get<double>();
      row.computed = {{"max_relative_deviation", dev},
                      {"anomaly_error", anomaly},
                      {"anomaly_error_supertraceless", flat.summary["max_anomaly_error"]},
                      {"supertraceless", flat.summary["supertraceless"]}};
      row.reference = {{"sdet0", flat.summary["sdet0"]}};
      row.rel_error = dev;
      row.abs_error = dev * std::abs(complex_from_json(flat.summary["sdet0"]));
      row.pass = flat.summary["supertraceless"].get<bool>() && dev <= tol_exact && anomaly <= tol_anomaly;
      if (flat.partial || general.partial) {
        out.partial = true;
        out.failure = "case " + std::to_string(i) + ": " + (flat.partial ? flat.failure : general.failure);
        row.pass = false;
      }
    } catch (const std::exception& e) {
      out.partial = true;
      out.failure = "case " + std::to_string(i) + ": " + e.what();
      row.pass = false;
      row.computed = {{"error", e.what()}};
    }
    return out;
  });

  const int trace_cases = p["trace_cases"].get<int>();
  const auto trace_rows = parallel_map(static_cast<std::size_t>(trace_cases), [&](std::size_t i) {
    const std::uint64_t cs = case_seed(seed ^ 0x7472616365ULL, i);
    Rng rng(cs);
    const double t = rng.uniform(0.05, 2.0);
    const ComplexPair pair = random_acyclic_pair(cs, rc);
    const auto detail = restricted_supertrace_detail(graded_commutator(pair.delta, pair.d), split_complement(pair.delta), t);
    ReportRow row;
    row.label = "restricted_trace";
    row.inputs = {{"case", i}, {"seed", cs}, {"t", t}};
    row.computed = {{"restricted", complex_to_json(detail.restricted)}};
    row.reference = {{"full_space", complex_to_json(detail.full_space)}};
    row.provenance = Provenance::internal_crosscheck;
    row.abs_error = std::abs(detail.restricted - detail.full_space);
    row.rel_error = detail.rel_defect;
    row.tolerance = tol["restricted_trace"];
    row.pass = detail.rel_defect <= row.tolerance;
    return row;
  });

  const int duhamel_cases = p["duhamel_cases"].get<int>();
  const auto duhamel_rows = parallel_map(static_cast<std::size_t>(duhamel_cases), [&](std::size_t i) {
    const std::uint64_t cs = case_seed(seed ^ 0x6475686dULL, i);
    Rng rng(cs);
    const ComplexPair pair = random_acyclic_pair(cs, rc);
    const GradedMap D0 = graded_commutator(pair.delta, pair.d);
    const GradedMap P = random_degree_preserving(D0.space(), rng, 0.5);
    const double s = 1.0 / std::max(1.0, D0.max_abs());
    const double tau = rng.uniform(0.0, 0.5), t = rng.uniform(0.2, 1.5);
    OperatorFamily fam;
    fam.value = [=](double x) { return (D0 + P * cplx(x)) * cplx(s); };
    fam.derivative = [=](double) { return P * cplx(s); };
    const GradedMap quad = duhamel_derivative(fam, tau, t);
    const GradedMap fd = heat_central_difference(fam, tau, t, 1e-4);
    ReportRow row;
    row.label = "duhamel";
    row.inputs = {{"case", i}, {"seed", cs}, {"tau", tau}, {"t", t}};
    row.computed = {{"quadrature_norm", quad.max_abs()}};
    row.reference = {{"central_difference_norm", fd.max_abs()}};
    row.provenance = Provenance::derived_oracle;
    row.abs_error = (quad - fd).max_abs();
    row.rel_error = row.abs_error / std::max(fd.max_abs(), 1e-300);
    row.tolerance = tol["duhamel"];
    row.pass = row.abs_error <= row.tolerance;
    return row;
  });

  ExperimentReport rep;
  double max_dev = 0.0, max_anomaly = 0.0, max_trace = 0.0, max_duhamel = 0.0;
  for (const auto& c : cases) {
    rep.rows.push_back(c.row);
    if (c.partial && !rep.partial) {
      rep.partial = true;
      rep.failure = c.failure;
    }
    if (c.row.computed.contains("max_relative_deviation")) {
      max_dev = std::max(max_dev, c.row.computed["max_relative_deviation"].get<double>());
      max_anomaly = std::max(max_anomaly, c.row.computed["anomaly_error"].get<double>());
    }
  }
  for (const auto& r : trace_rows) {
    rep.rows.push_back(r);
    max_trace = std::max(max_trace, r.rel_error);
  }
  for (const auto& r : duhamel_rows) {
    rep.rows.push_back(r);
    max_duhamel = std::max(max_duhamel, r.abs_error);
  }
  rep.add_verdict("exact_constancy", rep.partial ? NAN : max_dev, tol_exact,
                  "max over cases of |sdet_tau - sdet_0| / |sdet_0|, supertraceless generators");
  rep.add_verdict("anomaly_law", rep.partial ? NAN : max_anomaly, tol_anomaly,
                  "|log sdet_tau - log sdet_0 - int str theta|, general conjugators");
  if (trace_cases > 0) rep.add_verdict("restricted_trace", max_trace, tol["restricted_trace"], "restricted vs full-space str");
  if (duhamel_cases > 0)
    rep.add_verdict("duhamel", max_duhamel, tol["duhamel"], "quadrature vs central difference, h = 1e-4");
  rep.summary = {{"cases", seeds},
                 {"max_relative_deviation", max_dev},
                 {"max_anomaly_error", max_anomaly},
                 {"max_trace_defect", max_trace},
                 {"max_duhamel_error", max_duhamel}};
  return rep;
}

ExperimentReport hodge_anomaly(const json& p, std::uint64_t seed) {
  const int families = p["families"].get<int>();
  const int points = p["tau_points"].get<int>();
  const double tau_max = p["tau_max"].get<double>(), scale = p["scale"].get<double>();
  RandomComplexOptions rc;
  rc.max_dim = p["max_dim"].get<int>();
  std::vector<double> grid;
  for (int i = 0; i < points; ++i) grid.push_back(tau_max * i / (points - 1));

  struct Case {
    ExperimentReport raw, normalized;
    ReportRow row;
  };
  const auto cases = parallel_map(static_cast<std::size_t>(families), [&](std::size_t i) {
    Case c;
    const std::uint64_t cs = case_seed(seed, i);
    c.row.label = "family";
    c.row.provenance = Provenance::derived_oracle;
    try {
      const GradedMap d = random_acyclic_differential(cs, rc);
      Rng rng(cs ^ 0x6d6574726963ULL);
      const MetricFamily fam = random_metric_family(d.space(), rng, scale);
      c.raw = torsion_anomaly_experiment(d, fam, grid);
      c.normalized = torsion_anomaly_experiment(d, supervolume_normalize(fam), grid);
      c.row.inputs = {{"case", i}, {"seed", cs}, {"dims", d.space().dims()}};
      c.row.computed = {{"ledger_drift", c.raw.summary["max_ledger_drift"]},
                        {"normalized_ledger_drift", c.normalized.summary["max_ledger_drift"]},
                        {"normalized_deviation", c.normalized.summary["max_relative_sdet_deviation"]}};
      c.row.reference = {{"sdet0", c.raw.summary["sdet0"]}};
      c.row.abs_error = c.raw.summary["max_ledger_drift"].get<double>();
      c.row.rel_error = c.normalized.summary["max_relative_sdet_deviation"].get<double>();
      c.row.tolerance = 1e-8;
      c.row.pass = c.raw.all_pass() && c.normalized.all_pass();
    } catch (const std::exception& e) {
      c.raw.partial = true;
      c.raw.failure = "family " + std::to_string(i) + ": " + e.what();
      c.row.pass = false;
      c.row.computed = {{"error", e.what()}};
    }
    return c;
  });

  ExperimentReport rep;
  double ledger = 0.0, constancy = 0.0, conj = 0.0;
  for (const auto& c : cases) {
    rep.rows.push_back(c.row);
    for (const ExperimentReport* r : {&c.raw, &c.normalized})
      if (r->partial && !rep.partial) {
        rep.partial = true;
        rep.failure = r->failure;
      }
    ledger = std::max({ledger, verdict_value(c.raw, "anomaly_ledger"), verdict_value(c.normalized, "anomaly_ledger")});
    constancy = std::max(constancy, verdict_value(c.normalized, "exact_constancy"));
    conj = std::max({conj, verdict_value(c.raw, "conjugation"), verdict_value(c.normalized, "conjugation")});
  }
  rep.add_verdict("anomaly_ledger", rep.partial ? NAN : ledger, 1e-8,
                  "log sdet + sum (-1)^k log det G_k constant over tau");
  rep.add_verdict("exact_constancy", rep.partial ? NAN : constancy, 1e-9,
                  "sdet constant after supervolume normalization");
  rep.add_verdict("conjugation", rep.partial ? NAN : conj, 1e-10, "adjoint codifferential is a conjugate");
  rep.summary = {{"families", families}, {"tau_grid", grid}};
  return rep;
}

ExperimentReport circle_torsion_experiment(const json& p) {
  const auto thetas = p["thetas"].get<std::vector<double>>();
  const auto radii = p["radii"].get<std::vector<double>>();
  ExperimentReport rep;
  double closed = 0.0, spread = 0.0, cm = 0.0;
  for (double theta : thetas) {
    const double reference = 2.0 * std::abs(std::sin(theta / 2.0));
    const double comb = combinatorial_torsion(build_twisted_cochain(circle_cw(theta)));
    double lo = INFINITY, hi = -INFINITY;
    for (double r : radii) {
      ReportRow row;
      std::ostringstream label;
      label << "theta=" << theta << ",r=" << r;
      row.label = label.str();
      row.inputs = {{"theta", theta}, {"radius", r}};
      row.provenance = Provenance::derived_oracle;
      row.tolerance = 1e-8;
      try {
        const double spectral = circle_torsion(theta, r);
        row.computed = {{"torsion", spectral}, {"combinatorial", comb}};
        row.reference = {{"torsion", reference}};
        row.abs_error = std::abs(spectral - reference);
        row.rel_error = row.abs_error / reference;
        row.pass = row.abs_error <= row.tolerance && std::abs(spectral - comb) <= row.tolerance;
        closed = std::max(closed, row.abs_error);
        cm = std::max(cm, std::abs(spectral - comb));
        lo = std::min(lo, spectral);
        hi = std::max(hi, spectral);
      } catch (const std::exception& e) {
        row.pass = false;
        row.computed = {{"error", e.what()}};
        if (!rep.partial) {
          rep.partial = true;
          rep.failure = row.label + ": " + e.what();
        }
      }
      rep.rows.push_back(row);
    }
    if (hi >= lo) spread = std::max(spread, hi - lo);
  }
  rep.add_verdict("closed_form", rep.partial ? NAN : closed, 1e-8, "spectral torsion vs 2|sin(theta/2)|");
  rep.add_verdict("radius_invariance", rep.partial ? NAN : spread, 1e-8, "spread of the torsion over radii");
  rep.add_verdict("cheeger_muller", rep.partial ? NAN : cm, 1e-8, "combinatorial vs spectral torsion");
  rep.summary = {{"thetas", thetas}, {"radii", radii}};
  return rep;
}

ExperimentReport heat_parametrix_experiment(const json& p, const json& tol) {
  ParametrixReportOptions o;
  o.scheme = parametrix_scheme_from_string(p["scheme"].get<std::string>());
  o.ts = p["ts"].get<std::vector<double>>();
  o.x_points = p["x_points"].get<int>();
  o.exponent_tolerance = tol["exponent_tolerance"].get<double>();
  o.volterra = p["volterra"].get<bool>();
  o.volterra_t = p["volterra_t"].get<double>();
  o.volterra_options.k_max = p["k_max"].get<int>();
  const std::string text = p["potential"].get<std::string>();
  return heat_parametrix_report(parse_potential(text), text, p["N"].get<int>(), o);
}

ExperimentReport ruelle_cat_experiment(const json& p) {
  const auto m = p["matrix"].get<std::vector<long>>();
  const std::array<long, 4> a = {m[0], m[1], m[2], m[3]};
  const OrbitCatalog cat = cat_map_catalog(a, p["n_max"].get<int>(), p["alpha"].get<double>());
  ExperimentReport rep = ruelle_lambda_report(cat, p["lambda_grid"].get<std::vector<double>>());
  const int collapse_n = p["collapse_n"].get<int>();
  double bad = 0.0;
  for (int n = 1; n <= collapse_n; ++n) {
    const auto [num, den] = collapse_fraction(a, n);
    if (num != -den) bad += 1.0;
  }
  rep.add_verdict("collapse_identity", bad, 0.0,
                  "number of n <= " + std::to_string(collapse_n) + " where sum (-1)^k tr wedge^k P / |det(I-P)| != -1");
  rep.summary["catalog"] = catalog_summary_json(cat);
  return rep;
}

ExperimentReport subshift_experiment(const json& p) {
  const auto m = p["transitions"].get<std::vector<std::vector<int>>>();
  const auto roofs = p["roofs"].get<std::vector<std::vector<double>>>();
  const double alpha = p["alpha"].get<double>();
  ExperimentReport rep = roof_constancy_report(m, roofs, alpha);
  const auto grid = p["lambda_grid"].get<std::vector<double>>();
  if (!grid.empty()) {
    const OrbitCatalog cat = subshift_catalog(m, roofs.front(), p["n_max"].get<int>(), alpha);
    const ExperimentReport lam = ruelle_lambda_report(cat, grid);
    for (const auto& r : lam.rows) rep.rows.push_back(r);
    for (const auto& v : lam.verdicts) rep.verdicts.push_back(v);
    if (lam.partial && !rep.partial) {
      rep.partial = true;
      rep.failure = lam.failure;
    }
    rep.summary["lambda_summary"] = lam.summary;
    rep.summary["catalog"] = catalog_summary_json(cat);
  }
  return rep;
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

}  // namespace

json resolve_config(const json& raw) {
  Fields top(raw, "config");
  const json* exp = top.take("experiment");
  if (!exp) throw ConfigError("config.experiment", "missing");
  if (!exp->is_string()) throw ConfigError("config.experiment", "expected a string");
  const std::string id = exp->get<std::string>();
  const auto& ids = experiment_ids();
  if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
    std::string list;
    for (const auto& i : ids) list += (list.empty() ? "" : ", ") + i;
    throw ConfigError("config.experiment", "unknown experiment '" + id + "' (one of " + list + ")");
  }
  std::uint64_t seed = 1;
  if (const json* s = top.take("seed")) {
    if (!s->is_number_integer() || (s->is_number_integer() && !s->is_number_unsigned() && s->get<long long>() < 0))
      throw ConfigError("config.seed", "expected a nonnegative 64-bit integer");
    seed = s->get<std::uint64_t>();
  }
  json params = json::object();
  if (const json* p = top.take("parameters")) params = *p;
  json tolerances = json::object();
  for (const auto& [name, val] : default_tolerances().at(id)) tolerances[name] = val;
  if (const json* t = top.take("tolerances")) {
    if (!t->is_object()) throw ConfigError("config.tolerances", "expected an object");
    for (const auto& [name, val] : t->items()) {
      if (!tolerances.contains(name)) throw ConfigError("tolerances." + name, "unknown tolerance for " + id);
      if (!val.is_number() || val.get<double>() < 0.0)
        throw ConfigError("tolerances." + name, "expected a nonnegative number");
      tolerances[name] = val.get<double>();
    }
  }
  if (const json* o = top.take("output"))
    if (!o->is_string()) throw ConfigError("config.output", "expected a path string");
  top.finish("the config");
  json resolved;
  resolved["experiment"] = id;
  resolved["seed"] = seed;
  resolved["parameters"] = resolve_parameters(id, params, seed);
  resolved["tolerances"] = tolerances;
  return resolved;
}

std::string cache_key(const json& resolved) { return sha256_hex(canonical_dump(resolved)); }

ExperimentReport run_experiment(const json& resolved) {
  const auto start = std::chrono::steady_clock::now();
  const std::string id = resolved.at("experiment").get<std::string>();
  const std::uint64_t seed = resolved.at("seed").get<std::uint64_t>();
  const json& p = resolved.at("parameters");
  const json& tol = resolved.at("tolerances");
  ExperimentReport rep;
  try {
    if (id == "finite-bv") rep = finite_bv(p, seed, tol);
    else if (id == "hodge-anomaly") rep = hodge_anomaly(p, seed);
    else if (id == "circle-torsion") rep = circle_torsion_experiment(p);
    else if (id == "heat-parametrix") rep = heat_parametrix_experiment(p, tol);
    else if (id == "ruelle-cat") rep = ruelle_cat_experiment(p);
    else if (id == "subshift-zeta") rep = subshift_experiment(p);
    else throw ConfigError("config.experiment", "unknown experiment '" + id + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    rep = ExperimentReport{};
    rep.partial = true;
    rep.failure = e.what();
  }
  // tolerance overrides apply to verdicts of the form value <= tolerance
  for (auto& v : rep.verdicts)
    if (tol.contains(v.name)) {
      v.tolerance = tol[v.name].get<double>();
      v.pass = std::isfinite(v.value) && v.value <= v.tolerance;
    }
  if (rep.partial && rep.verdicts.empty()) rep.add_verdict("completed", NAN, 0.0, rep.failure);
  rep.experiment = id;
  rep.config = resolved;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

std::string cache_dir_from_env() {
  const char* dir = std::getenv("SDET_CACHE_DIR");
  return dir ? std::string(dir) : std::string();
}

RunOutcome run(const json& raw_config, const RunOptions& opts) {
  const json resolved = resolve_config(raw_config);
  set_worker_threads(opts.jobs);
  RunOutcome out;
  out.key = cache_key(resolved);
  namespace fs = std::filesystem;
  const bool cached = opts.use_cache && !opts.cache_dir.empty();
  const fs::path entry = cached ? fs::path(opts.cache_dir) / (out.key + ".json") : fs::path();
  if (cached && fs::exists(entry)) {
    std::ifstream in(entry, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      const json stored = json::parse(ss.str());
      if (stored.at("config") == resolved) {
        out.report = ExperimentReport::from_json(stored);
        out.cache_hit = true;
      }
    } catch (const std::exception&) {
      out.cache_hit = false;  // unreadable entry, recompute and overwrite
    }
  }
  if (!out.cache_hit) {
    out.report = run_experiment(resolved);
    if (cached && !out.report.partial) write_file_atomic(entry.string(), canonical_dump(out.report.to_json(false), 2));
  }
  out.report_text = canonical_dump(out.report.to_json(opts.include_timing), 2);
  out.exit_code = out.report.all_pass() ? 0 : 1;
  return out;
}

}  // namespace sdet
