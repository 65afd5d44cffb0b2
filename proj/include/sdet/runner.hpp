#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdet/report.hpp"

namespace sdet {

// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::invalid_argument(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

const std::vector<std::string>& experiment_ids();

// "pi", "2pi/3", "-pi/4", "0.5*pi", "1.25"
double parse_angle(const std::string& text);
// "start:stop:step", stop included when it lies on the grid
std::vector<double> parse_grid(const std::string& text);

// Per-case seed derived from the run seed (splitmix64 of seed and index).
std::uint64_t case_seed(std::uint64_t seed, std::uint64_t index);

// Checks a raw config {experiment, seed, parameters, tolerances[, output]} and fills in
// every default. Angles and grids come back as plain numbers. "output" is dropped.
json resolve_config(const json& raw);

// SHA-256 (hex) of the canonical serialization of the resolved config.
std::string cache_key(const json& resolved);

// Numerical failures give a partial report instead of throwing.
ExperimentReport run_experiment(const json& resolved);

struct RunOptions {
  bool use_cache = true;
  std::string cache_dir;  // empty disables the cache
  int jobs = 0;           // 0 keeps the OpenMP default
  bool include_timing = false;
};

struct RunOutcome {
  ExperimentReport report;
  std::string key;
  bool cache_hit = false;
  std::string report_text;  // canonical JSON as it should be written
  int exit_code = 0;        // 0 all verdicts pass, 1 otherwise
};

// Throws ConfigError for a bad config; everything else ends up in the report.
RunOutcome run(const json& raw_config, const RunOptions& opts = {});

// SDET_CACHE_DIR or empty
std::string cache_dir_from_env();

}  // namespace sdet
