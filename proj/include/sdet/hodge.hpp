#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdet/graded.hpp"
#include "sdet/random_complex.hpp"
#include "sdet/report.hpp"

namespace sdet {

enum class PathType { constant, exp_linear, polynomial };

std::string to_string(PathType p);
PathType path_type_from_string(const std::string& s);

// Per-degree Gram matrices G_k(tau).
//   constant:   G_k(tau) = C_k
//   exp_linear: G_k(tau) = B_k^* exp(tau H_k) B_k with H_k Hermitian
//   polynomial: G_k(tau) = sum_j tau^j C_kj
// An optional supervolume rescale multiplies one degree by a positive scalar.
class MetricFamily {
 public:
  static MetricFamily constant(std::vector<Mat> grams);
  static MetricFamily exp_linear(std::vector<Mat> factors, std::vector<Mat> generators);
  static MetricFamily polynomial(std::vector<std::vector<Mat>> coeffs);

  PathType type() const { return type_; }
  int degree_count() const { return static_cast<int>(a_.size()); }

  // Throws std::invalid_argument if some G_k(tau) is not Hermitian positive definite.
  std::vector<Mat> grams(double tau) const;
  std::vector<Mat> gram_derivatives(double tau) const;

  // sum_k (-1)^k log det G_k(tau) and its tau-derivative
  double supervolume(double tau) const;
  double supervolume_derivative(double tau) const;

  bool normalized() const { return rescale_.has_value(); }
  int rescaled_degree() const { return rescale_ ? rescale_->degree : -1; }
  // log of the scalar applied to the rescaled degree (0 if none)
  double log_rescale(double tau) const;

  json to_json() const;
  static MetricFamily from_json(const json& j);

  friend MetricFamily supervolume_normalize(const MetricFamily& family);

 private:
  struct Rescale {
    int degree;
    double base_volume;  // raw supervolume at tau = 0
  };

  MetricFamily(PathType type, std::vector<Mat> a, std::vector<Mat> b, std::vector<std::vector<Mat>> poly);
  std::vector<Mat> raw_grams(double tau) const;
  std::vector<Mat> raw_derivatives(double tau) const;
  double raw_supervolume(double tau) const;
  double raw_supervolume_derivative(double tau) const;
  int dim(int k) const;

  PathType type_;
  std::vector<Mat> a_;                 // constant grams or exp factors B_k
  std::vector<Mat> b_;                 // exp generators H_k
  std::vector<std::vector<Mat>> poly_;  // polynomial coefficients
  std::optional<Rescale> rescale_;
};

// Rescale the highest nonempty degree so that the supervolume is constant in tau.
MetricFamily supervolume_normalize(const MetricFamily& family);

// log det of a Hermitian positive definite matrix; throws std::invalid_argument otherwise.
double log_det_hpd(const Mat& g);
void check_positive_definite(const Mat& g, int degree);

// delta^(k) = G_{k-1}^{-1} d^(k-1)* G_k
GradedMap adjoint_codifferential(const GradedMap& d, const std::vector<Mat>& grams);
GradedMap hodge_laplacian(const GradedMap& d, const std::vector<Mat>& grams);

struct AdjointDiagnostic {
  double adjointness_defect = 0.0;  // max |<d a, b>_G - <a, delta b>_G| on random probes
  double nilpotency = 0.0;
  double self_adjoint_defect = 0.0;
  double min_eigenvalue = 0.0;  // smallest eigenvalue of the Laplacian over all degrees
};
AdjointDiagnostic adjoint_diagnostics(const GradedMap& d, const std::vector<Mat>& grams, std::uint64_t seed = 1);

// beta_k = G_k(tau)^{-1} G_k(0), theta_k = -G_k(tau)^{-1} G_k'(tau).
InnerVariation metric_inner_variation(const GradedMap& d, const MetricFamily& family);
// max |adjoint_codifferential(G(tau)) - beta delta_0 beta^{-1}|
double conjugation_defect(const GradedMap& d, const MetricFamily& family, double tau);

ExperimentReport torsion_anomaly_experiment(const GradedMap& d, const MetricFamily& family,
                                            const std::vector<double>& tau_grid);

// exp_linear family with random invertible factors and Hermitian generators of norm ~ scale.
MetricFamily random_metric_family(const GradedVectorSpace& space, Rng& rng, double scale = 0.5);

// Central difference of G(tau) with one Richardson step, h = 1e-5.
std::vector<Mat> numeric_gram_derivative(const MetricFamily& family, double tau, double h = 1e-5);

}  // namespace sdet
