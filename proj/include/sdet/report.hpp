#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sdet/linalg.hpp"

namespace sdet {

using json = nlohmann::json;

enum class Provenance { derived_oracle, trivial, internal_crosscheck };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

struct ReportRow {
  std::string label;
  json inputs = json::object();
  json computed = json::object();
  json reference = json::object();
  Provenance provenance = Provenance::internal_crosscheck;
  double abs_error = 0.0;
  double rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

struct Verdict {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct ExperimentReport {
  std::string experiment;
  json config = json::object();
  std::vector<ReportRow> rows;
  std::vector<Verdict> verdicts;
  json summary = json::object();
  bool partial = false;
  std::string failure;
  double wall_seconds = 0.0;

  bool all_pass() const;
  void add_verdict(std::string name, double value, double tolerance, std::string detail = {});
  // The "timing" member is the only nondeterministic field.
  json to_json(bool include_timing = true) const;
  std::string to_csv() const;
  static ExperimentReport from_json(const json& j);
};

// Sorted keys, integers verbatim, doubles with 17 significant digits.
// Non-finite doubles are written as the strings "nan", "inf", "-inf".
std::string canonical_dump(const json& j, int indent = -1);

json complex_to_json(cplx z);
cplx complex_from_json(const json& j);

// Write to a sibling temporary file and rename over the target.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace sdet
