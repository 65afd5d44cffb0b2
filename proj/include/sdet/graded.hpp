#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdet/linalg.hpp"
#include "sdet/report.hpp"

namespace sdet {

// Relative singular-value threshold used for every rank decision.
inline constexpr double kRankTolerance = 1e-10;

class GradedVectorSpace {
 public:
  explicit GradedVectorSpace(std::vector<int> dims);

  int top_degree() const { return static_cast<int>(dims_.size()) - 1; }
  int dim(int k) const;  // 0 outside 0..n
  const std::vector<int>& dims() const { return dims_; }
  bool contains(int k) const { return k >= 0 && k <= top_degree(); }
  bool operator==(const GradedVectorSpace&) const = default;

 private:
  std::vector<int> dims_;
};

// Degree-indexed family of blocks; block(k) maps degree k to degree k + shift.
// Blocks whose target degree is out of range have zero rows.
class GradedMap {
 public:
  GradedMap(GradedVectorSpace space, int shift);
  GradedMap(GradedVectorSpace space, int shift, std::vector<Mat> blocks);

  static GradedMap identity(const GradedVectorSpace& space);

  const GradedVectorSpace& space() const { return space_; }
  int shift() const { return shift_; }
  int top_degree() const { return space_.top_degree(); }
  const Mat& block(int k) const;
  Mat& block(int k);
  const std::vector<Mat>& blocks() const { return blocks_; }

  GradedMap operator+(const GradedMap& o) const;
  GradedMap operator-(const GradedMap& o) const;
  GradedMap operator*(cplx c) const;
  // Composition (*this) after o.
  GradedMap operator*(const GradedMap& o) const;

  double max_abs() const;
  // Sum over degrees of (-1)^k tr(block k); shift must be 0.
  cplx supertrace() const;
  // Block-wise inverse of a shift-0 map; throws if a block is singular.
  GradedMap inverse() const;

 private:
  void check_compatible(const GradedMap& o, const char* what) const;

  GradedVectorSpace space_;
  int shift_;
  std::vector<Mat> blocks_;
};

// Bilinear pairing of degree k with degree n - k.
// sign convention: symmetric means <w, delta h> = <delta w, h>, alternating
// inserts (-1)^k for w in degree k.
enum class PairingSign { symmetric, alternating };

struct PairingForm {
  PairingForm(GradedVectorSpace space, std::vector<Mat> gram, PairingSign sign);
  static PairingForm identity(const GradedVectorSpace& space, PairingSign sign);

  GradedVectorSpace space;
  std::vector<Mat> gram;
  PairingSign sign;
};

struct CodifferentialDiagnostic {
  double delta_nilpotency = 0.0;
  double d_nilpotency = 0.0;
  double symmetry_defect = 0.0;
  bool pass = false;
};

struct DegreeRank {
  int rank_in = 0;
  int rank_out = 0;
  int kernel_dim = 0;
  int homology_dim = 0;
};

struct AcyclicityResult {
  bool acyclic = false;
  std::vector<DegreeRank> degrees;
};

struct Splitting {
  std::vector<Mat> basis_L;  // orthonormal columns spanning L^(k) = im(delta into k)
  std::vector<Mat> basis_C;  // orthonormal complement
  std::vector<Mat> projector_L;
  std::vector<double> delta_condition;  // condition number of delta: C^(k) -> L^(k-1)

  Mat projector_C(int k) const;
  int dim_L(int k) const { return static_cast<int>(basis_L.at(k).cols()); }
  // sum_k (-1)^k dim L^(k)
  int euler_characteristic_L() const;
};

struct SdetDetail {
  cplx value;
  cplx crosscheck;            // prod_k det(D^(k))^((-1)^(k+1) k)
  double crosscheck_rel = 0.0;
  double invariance_defect = 0.0;
  std::vector<cplx> restricted_dets;
};

struct SupertraceDetail {
  cplx restricted;
  cplx full_space;
  double rel_defect = 0.0;
};

// A tau-family of shift-0 maps with optional analytic derivative.
struct OperatorFamily {
  std::function<GradedMap(double)> value;
  std::function<GradedMap(double)> derivative;  // may be empty
  double fd_step = 1e-5;

  GradedMap derivative_at(double tau) const;
};

struct InnerVariation {
  enum class Mode { generator, conjugator };

  Mode mode = Mode::generator;
  std::function<GradedMap(double)> theta;  // shift 0
  std::function<GradedMap(double)> beta;   // conjugator mode only, beta(0) = identity
  // Closed form of the integral of str(theta) from 0 to tau when known.
  std::function<cplx(double)> supertrace_integral;

  static InnerVariation zero(const GradedVectorSpace& space);
  // theta = Theta constant; beta = exp(tau Theta).
  static InnerVariation constant(const GradedMap& generator, Mode mode);
  // theta(tau) = sum_j tau^j Theta_j; generator mode only.
  static InnerVariation polynomial_generator(std::vector<GradedMap> coeffs);
  // beta(tau) = I + sum_{j>=1} tau^j B_j; theta = beta' beta^{-1}.
  static InnerVariation polynomial_conjugator(std::vector<GradedMap> coeffs);
};

GradedMap graded_commutator(const GradedMap& delta, const GradedMap& d);

CodifferentialDiagnostic check_codifferential(const GradedMap& delta, const GradedMap& d,
                                              const PairingForm& pairing);

AcyclicityResult acyclicity_check(const GradedMap& map);

Splitting split_complement(const GradedMap& delta);

SdetDetail sdet_restricted_detail(const GradedMap& D, const Splitting& split);
cplx sdet_restricted(const GradedMap& D, const Splitting& split);

SupertraceDetail restricted_supertrace_detail(const GradedMap& D, const Splitting& split, double t);
cplx restricted_supertrace(const GradedMap& D, const Splitting& split, double t);

// -int_0^t exp(-(t-u)D) D' exp(-uD) du by Gauss-Legendre.
GradedMap duhamel_derivative(const OperatorFamily& family, double tau, double t,
                             int quadrature_nodes = 32);
// (exp(-t D(tau+h)) - exp(-t D(tau-h))) / 2h
GradedMap heat_central_difference(const OperatorFamily& family, double tau, double t, double h);
GradedMap heat_operator(const GradedMap& D, double t);

struct PathOptions {
  double local_error = 1e-10;
  double initial_step = 1e-2;
};
GradedMap inner_variation_path(const GradedMap& delta0, const InnerVariation& variation,
                               double tau, const PathOptions& options = {});

// Integral of str(theta) over [0, tau]; exact when the variation supplies it,
// otherwise composite Gauss-Legendre over the given breakpoints.
cplx supertrace_integral(const InnerVariation& variation, double tau);

ExperimentReport constancy_report(const GradedMap& delta0, const GradedMap& d,
                                  const InnerVariation& variation,
                                  const std::vector<double>& tau_grid);

}  // namespace sdet
