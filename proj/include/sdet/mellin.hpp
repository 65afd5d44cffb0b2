#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sdet/linalg.hpp"
#include "sdet/special.hpp"

namespace sdet {

using json = nlohmann::json;

struct Eigenvalue {
  cplx value;
  int multiplicity = 1;
};

// lambda_j = scale * (j + start + offset)^power for j >= 0, each with the given multiplicity.
struct PowerTail {
  double scale = 1.0;
  double offset = 1.0;
  double power = 2.0;
  int start = 0;
  int multiplicity = 1;

  double first_base() const { return offset + start; }
};

struct DegreeSpectrum {
  std::vector<Eigenvalue> eigs;
  std::vector<PowerTail> tails;
};

class SpectrumByDegree {
 public:
  SpectrumByDegree() = default;
  explicit SpectrumByDegree(std::vector<DegreeSpectrum> degrees);

  int degree_count() const { return static_cast<int>(degrees_.size()); }
  const DegreeSpectrum& degree(int k) const { return degrees_.at(static_cast<std::size_t>(k)); }
  bool finite() const;

  // Single eigenvalue in one degree, all other degrees empty.
  static SpectrumByDegree single(int degree, int degree_count, cplx value);
  // ((n + theta/2pi) / radius)^2 for n in Z, the same list on degrees 0 and 1.
  static SpectrumByDegree twisted_circle(double theta, double radius);

 private:
  std::vector<DegreeSpectrum> degrees_;
};

json spectrum_to_json(const SpectrumByDegree& spec);
SpectrumByDegree spectrum_from_json(const json& j);

// Continuation not available for a tail class at the requested point.
class UnsupportedTail : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceFailure : public std::runtime_error {
 public:
  ConvergenceFailure(const std::string& what, cplx previous, cplx last)
      : std::runtime_error(what), previous_iterate(previous), last_iterate(last) {}
  cplx previous_iterate;
  cplx last_iterate;
};

class RegularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HeatTrace {
  std::vector<cplx> values;        // per degree
  std::vector<double> tail_bound;  // bound on the neglected part of each tail sum
};

HeatTrace heat_trace(const SpectrumByDegree& spec, double t);
// sum_k (-1)^(k+1) k tr exp(-t D_k)
cplx weighted_heat_supertrace(const SpectrumByDegree& spec, double t);

// Value and s-derivative of sum_j (lambda_j + shift)^(-s) in one degree.
Dual degree_zeta(const DegreeSpectrum& deg, cplx s, cplx shift);
cplx spectral_zeta(const SpectrumByDegree& spec, int degree, cplx s, cplx shift);

enum class CutoffProfile { smooth, cosine };

std::string to_string(CutoffProfile p);
CutoffProfile cutoff_profile_from_string(const std::string& name);

// chi_N: identically 1 on [1/N, N], supported in (1/(2N), 2N).
struct CutoffSequence {
  double n = 64.0;
  CutoffProfile profile = CutoffProfile::smooth;

  double operator()(double t) const;
  double derivative(double t) const;
};

// Path A: sum_k (-1)^(k+1) k zeta_k(s, lambda), with d/ds.
Dual F_closed_form(const SpectrumByDegree& spec, cplx lambda, cplx s);

struct MellinOptions {
  CutoffProfile profile = CutoffProfile::smooth;
  double initial_n = 64.0;
  double max_n = 16777216.0;
  double tolerance = 1e-10;
};

struct MellinResult {
  cplx value;
  double final_n = 0.0;
  cplx previous;  // iterate at final_n / 2
  int iterations = 0;
};

// <weighted heat supertrace, t^(s-1) e^(-lambda t) chi_N> / Gamma(s), N doubled until two
// iterates agree to the tolerance.
cplx mellin_pairing(const SpectrumByDegree& spec, cplx lambda, cplx s, const CutoffSequence& chi);
MellinResult F_numeric(const SpectrumByDegree& spec, cplx lambda, cplx s, const MellinOptions& opts = {});

// -d/ds F at lambda = 0, s = 0.
cplx log_sdet_via_zeta(const SpectrumByDegree& spec);

double circle_torsion(double theta, double radius);

}  // namespace sdet
