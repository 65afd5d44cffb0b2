#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdet/report.hpp"
#include "sdet/special.hpp"

namespace sdet {

using int128 = __int128;
std::string int128_to_string(int128 v);

// Re lambda too small for the truncated orbit sums.
class AbscissaError : public std::domain_error {
 public:
  AbscissaError(double required, double given);
  double required() const { return required_; }

 private:
  double required_;
};

// Requested value sits on a pole of the continued zeta.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedOperation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One class of closed orbits sharing all data; `count` orbits of this kind.
struct ClosedOrbit {
  double period = 0.0;
  double primitive_period = 0.0;
  int iterate = 1;
  int word_length = 1;  // steps of the underlying map, drives the holonomy
  double count = 1.0;
  cplx holonomy = 1.0;
  std::vector<cplx> poincare;  // empty when has_poincare is false
};

enum class GeneratorKind { cat_map, subshift };

struct OrbitCatalog {
  GeneratorKind kind = GeneratorKind::cat_map;
  std::array<long, 4> cat_matrix{};  // row-major 2x2
  std::vector<std::vector<int>> transitions;
  std::vector<double> roof;
  double alpha = 0.0;
  int n_max = 0;
  int stable_dim = 1;
  int unstable_dim = 1;
  bool has_poincare = false;
  double growth_rate = 0.0;     // log of the largest eigenvalue (per step)
  double min_step_time = 1.0;   // smallest roof value
  double count_constant = 1.0;  // N_n <= count_constant * exp(growth_rate * n)
  std::vector<ClosedOrbit> orbits;
  std::vector<int128> fixed_point_counts;  // index n = 1..n_max, slot 0 unused
  std::vector<int128> primitive_counts;    // primitive orbits of word length n
  std::vector<std::string> warnings;

  double abscissa() const { return growth_rate / min_step_time; }
  // Only orbits of word length <= n (used for hand-built truncations).
  OrbitCatalog truncated(int n) const;
};

int mobius(int n);

// Hyperbolic A in SL(2, Z), orbits of the constant-roof suspension.
OrbitCatalog cat_map_catalog(const std::array<long, 4>& a, int n_max, double alpha);
// Subshift of finite type with a locally constant roof.
OrbitCatalog subshift_catalog(const std::vector<std::vector<int>>& m, const std::vector<double>& roof, int n_max,
                              double alpha);

// (sum_k (-1)^k tr wedge^k P, |det(I - P)|) for A^n, in integers.
std::pair<int128, int128> collapse_fraction(const std::array<long, 4>& a, int n);

struct CombAtom {
  double time = 0.0;
  cplx weight;  // already multiplied by the orbit count
};
std::vector<CombAtom> guillemin_comb(const OrbitCatalog& catalog, int k);

struct OrbitSum {
  cplx value;
  double tail_bound = 0.0;
};

// Geometric bound on the orbits left out by the word-length truncation.
double truncation_tail_bound(const OrbitCatalog& catalog, cplx lambda);
void check_abscissa(const OrbitCatalog& catalog, cplx lambda);

OrbitSum orbit_log_sdet(const OrbitCatalog& catalog, cplx lambda);

struct ZetaTruncation {
  cplx value;
  cplx log_value;
  double tail_bound = 0.0;
};
// Euler product over primitive orbits.
ZetaTruncation ruelle_zeta_truncated(const OrbitCatalog& catalog, cplx lambda);
// -sum_n (1/n) sum_{word length n} holonomy e^{-lambda T}: the log of the product as an orbit sum.
OrbitSum ruelle_log_zeta_sum(const OrbitCatalog& catalog, cplx lambda);

double cat_expanding_eigenvalue(const std::array<long, 4>& a);
cplx zeta_closed_form_cat(const std::array<long, 4>& a, double alpha, cplx lambda);
// det(I - e^{i alpha} T(lambda)), T_ij = M_ij exp(-lambda roof_j); row_roof puts roof_i instead.
cplx zeta_transfer_determinant(const std::vector<std::vector<int>>& m, const std::vector<double>& roof, double alpha,
                               cplx lambda, bool row_roof = false);

// (1/Gamma(s)) sum weight_k T^{s-1} e^{-lambda T}, with d/ds.
Dual F_k_dirichlet(const OrbitCatalog& catalog, int k, cplx lambda, cplx s);

// Reports: rows {lambda, zeta, log_sdet, tail_bound}.
ExperimentReport ruelle_lambda_report(const OrbitCatalog& catalog, const std::vector<double>& lambdas);
// Value at lambda = 0 over a list of roofs.
ExperimentReport roof_constancy_report(const std::vector<std::vector<int>>& m,
                                       const std::vector<std::vector<double>>& roofs, double alpha);

json catalog_summary_json(const OrbitCatalog& catalog);

}  // namespace sdet
