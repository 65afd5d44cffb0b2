#include "sdet/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sdet {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::derived_oracle: return "derived-oracle";
    case Provenance::trivial: return "trivial";
    case Provenance::internal_crosscheck: return "internal-crosscheck";
  }
  return "internal-crosscheck";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "derived-oracle") return Provenance::derived_oracle;
  if (s == "trivial") return Provenance::trivial;
  if (s == "internal-crosscheck") return Provenance::internal_crosscheck;
  throw std::invalid_argument("unknown provenance tag: " + s);
}

bool ExperimentReport::all_pass() const {
  if (partial) return false;
  for (const auto& v : verdicts)
    if (!v.pass) return false;
  for (const auto& r : rows)
    if (!r.pass) return false;
  return true;
}

void ExperimentReport::add_verdict(std::string name, double value, double tolerance,
                                   std::string detail) {
  const bool ok = std::isfinite(value) && value <= tolerance;
  verdicts.push_back({std::move(name), ok, value, tolerance, std::move(detail)});
}

json ExperimentReport::to_json(bool include_timing) const {
  json j;
  j["experiment"] = experiment;
  j["config"] = config;
  j["partial"] = partial;
  if (!failure.empty()) j["failure"] = failure;
  j["summary"] = summary;
  j["all_pass"] = all_pass();
  json rs = json::array();
  for (const auto& r : rows) {
    rs.push_back({{"label", r.label},
                  {"inputs", r.inputs},
                  {"computed", r.computed},
                  {"reference", r.reference},
                  {"provenance", to_string(r.provenance)},
                  {"abs_error", r.abs_error},
                  {"rel_error", r.rel_error},
                  {"tolerance", r.tolerance},
                  {"pass", r.pass}});
  }
  j["rows"] = rs;
  json vs = json::array();
  for (const auto& v : verdicts) {
    vs.push_back({{"name", v.name},
                  {"pass", v.pass},
                  {"value", v.value},
                  {"tolerance", v.tolerance},
                  {"detail", v.detail}});
  }
  j["verdicts"] = vs;
  if (include_timing) j["timing"] = {{"wall_seconds", wall_seconds}};
  return j;
}

ExperimentReport ExperimentReport::from_json(const json& j) {
  ExperimentReport r;
  r.experiment = j.at("experiment").get<std::string>();
  r.config = j.at("config");
  r.partial = j.value("partial", false);
  r.failure = j.value("failure", std::string{});
  r.summary = j.value("summary", json::object());
  for (const auto& jr : j.at("rows")) {
    ReportRow row;
    row.label = jr.at("label").get<std::string>();
    row.inputs = jr.at("inputs");
    row.computed = jr.at("computed");
    row.reference = jr.at("reference");
    row.provenance = provenance_from_string(jr.at("provenance").get<std::string>());
    auto num = [](const json& v) {
      if (v.is_string()) return std::stod(v.get<std::string>());
      return v.get<double>();
    };
    row.abs_error = num(jr.at("abs_error"));
    row.rel_error = num(jr.at("rel_error"));
    row.tolerance = num(jr.at("tolerance"));
    row.pass = jr.at("pass").get<bool>();
    r.rows.push_back(std::move(row));
  }
  for (const auto& jv : j.at("verdicts")) {
    Verdict v;
    v.name = jv.at("name").get<std::string>();
    v.pass = jv.at("pass").get<bool>();
    const auto& val = jv.at("value");
    v.value = val.is_string() ? std::stod(val.get<std::string>()) : val.get<double>();
    v.tolerance = jv.at("tolerance").get<double>();
    v.detail = jv.value("detail", std::string{});
    r.verdicts.push_back(std::move(v));
  }
  if (j.contains("timing")) r.wall_seconds = j["timing"].value("wall_seconds", 0.0);
  return r;
}

namespace {

std::string format_double(double x) {
  if (std::isnan(x)) return "\"nan\"";
  if (std::isinf(x)) return x > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s(buf);
  // keep the value recognisably floating point
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

void dump_rec(const json& j, int indent, int depth, std::string& out) {
  const bool pretty = indent >= 0;
  auto newline = [&](int d) {
    if (!pretty) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map keeps keys sorted
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += json(it.key()).dump();
        out += pretty ? ": " : ":";
        dump_rec(it.value(), indent, depth + 1, out);
      }
      newline(depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        dump_rec(v, indent, depth + 1, out);
      }
      newline(depth);
      out += ']';
      return;
    }
    case json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

void flatten(const json& j, const std::string& prefix, std::map<std::string, std::string>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    out[prefix + ".re"] = canonical_dump(j[0]);
    out[prefix + ".im"] = canonical_dump(j[1]);
  } else if (j.is_array()) {
    std::string s;
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) s += ';';
      s += j[i].is_string() ? j[i].get<std::string>() : canonical_dump(j[i]);
    }
    out[prefix] = s;
  } else if (j.is_string()) {
    out[prefix] = j.get<std::string>();
  } else {
    out[prefix] = canonical_dump(j);
  }
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string r = "\"";
  for (char c : s) {
    if (c == '"') r += '"';
    r += c;
  }
  return r + '"';
}

}  // namespace

std::string canonical_dump(const json& j, int indent) {
  std::string out;
  dump_rec(j, indent, 0, out);
  return out;
}

std::string ExperimentReport::to_csv() const {
  std::vector<std::map<std::string, std::string>> flat;
  std::set<std::string> columns;
  for (const auto& r : rows) {
    std::map<std::string, std::string> m;
    flatten(r.inputs, "in", m);
    flatten(r.computed, "out", m);
    flatten(r.reference, "ref", m);
    for (const auto& [k, v] : m) columns.insert(k);
    flat.push_back(std::move(m));
  }
  std::ostringstream os;
  os << "label,provenance,pass,abs_error,rel_error,tolerance";
  for (const auto& c : columns) os << ',' << csv_escape(c);
  os << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << csv_escape(r.label) << ',' << to_string(r.provenance) << ',' << (r.pass ? "true" : "false")
       << ',' << canonical_dump(json(r.abs_error)) << ',' << canonical_dump(json(r.rel_error)) << ','
       << canonical_dump(json(r.tolerance));
    for (const auto& c : columns) {
      os << ',';
      auto it = flat[i].find(c);
      if (it != flat[i].end()) os << csv_escape(it->second);
    }
    os << '\n';
  }
  return os.str();
}

json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

cplx complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  throw std::invalid_argument("complex number must be a number or [re, im]");
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f << contents;
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace sdet
