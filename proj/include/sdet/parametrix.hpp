#pragma once

#include <compare>
#include <map>
#include <string>
#include <vector>

#include "sdet/fourier.hpp"
#include "sdet/report.hpp"

namespace sdet {

// Heat parametrix for D = -d^2/dx^2 + v(x) on the circle of length 2 pi.
//
// principal: d0 = xi^2, v enters the recursion as the order-0 part of the symbol.
// folded:    d0 = xi^2 + v, so v sits inside every resolvent factor.
enum class ParametrixScheme { principal, folded };
std::string to_string(ParametrixScheme s);
ParametrixScheme parametrix_scheme_from_string(const std::string& s);

// xi^a (d0 - lambda)^{-b}; `lift` counts factors of base-potential derivatives,
// each carrying weight 2 so that x-derivatives keep the order.
struct SymbolKey {
  int xi_power = 0;
  int resolvent_power = 1;
  int lift = 0;

  int order() const { return xi_power - 2 * resolvent_power + 2 * lift; }
  auto operator<=>(const SymbolKey&) const = default;
};

class LaurentSymbol {
 public:
  explicit LaurentSymbol(int order = 0) : order_(order) {}

  int order() const { return order_; }
  const std::map<SymbolKey, FourierSeries>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  double dropped_tail() const;
  // Adds c * key; the key must have the declared order.
  void add(const SymbolKey& key, const FourierSeries& c);
  LaurentSymbol& operator+=(const LaurentSymbol& o);
  friend bool operator==(const LaurentSymbol& a, const LaurentSymbol& b) {
    return a.order_ == b.order_ && a.terms_ == b.terms_;
  }
  // Value at (x, xi, lambda) with d0 = xi^2 + base(x).
  cplx evaluate(double x, double xi, cplx lambda, const FourierSeries& base = {}) const;

  json to_json() const;

 private:
  int order_;
  std::map<SymbolKey, FourierSeries> terms_;
};

// Mixed-order sums, keyed by order.
using SymbolSum = std::map<int, LaurentSymbol>;

struct Parametrix {
  FourierSeries potential;
  FourierSeries base;  // zero for the principal scheme, the potential when folded
  ParametrixScheme scheme = ParametrixScheme::principal;
  int N = 0;
  std::vector<LaurentSymbol> q;          // q_0 .. q_{N+1}, q_M of order -2-M
  std::vector<LaurentSymbol> remainder;  // homogeneous pieces of r^N, orders -(N+2), -(N+3)
};

constexpr int kMaxParametrixOrder = 8;

Parametrix parametrix_symbols(const FourierSeries& v, int N,
                              ParametrixScheme scheme = ParametrixScheme::principal);

// sum_alpha (-i)^alpha / alpha! d_xi^alpha (d - lambda) d_x^alpha q, exact.
SymbolSum apply_operator_symbol(const Parametrix& p, const SymbolSum& q);
// P(q^N) - 1 - r^N; empty when the defining relation holds.
SymbolSum defining_relation_defect(const Parametrix& p);

// Integral of xi^a e^{i z xi - t xi^2} over the real line.
cplx gaussian_moment(int a, double t, double z);

// Kernel of a sum of symbols, contour integrals done by residues and the
// xi-integral in closed form, periodized over the circle.
class SymbolKernel {
 public:
  SymbolKernel() = default;
  SymbolKernel(const std::vector<LaurentSymbol>& parts, const FourierSeries& base);

  cplx operator()(double t, double x, double y) const;
  // Row x fixed, all z on the grid: K(t, x, z_j).
  std::vector<cplx> row(double t, double x, const std::vector<double>& zs) const;
  // Column y fixed: K(t, z_j, y).
  std::vector<cplx> column(double t, const std::vector<double>& zs, double y) const;
  // w_i = sum_j K(t, z_i, z_j) u_j h on a uniform periodic grid.
  std::vector<cplx> apply(double t, const std::vector<cplx>& u) const;
  bool empty() const { return groups_.empty(); }

 private:
  struct Group {
    int xi_power = 0;
    // coefficient pieces: (resolvent power, Fourier modes)
    std::vector<std::pair<int, std::vector<std::pair<int, cplx>>>> pieces;
  };
  cplx coefficient(const Group& g, double t, double x) const;
  cplx base_factor(double t, double x) const;

  std::vector<Group> groups_;
  std::vector<std::pair<int, cplx>> base_;
};

cplx kernel_from_symbol(const LaurentSymbol& sym, double t, double x, double y, const FourierSeries& base = {});

class ApproximateHeatKernel {
 public:
  ApproximateHeatKernel(const FourierSeries& v, int N, ParametrixScheme scheme = ParametrixScheme::principal);

  const Parametrix& symbols() const { return p_; }
  cplx value(double t, double x, double y) const { return k_(t, x, y); }
  // S_N = (d_t + D) K_N
  cplx remainder(double t, double x, double y) const { return s_(t, x, y); }
  const SymbolKernel& kernel() const { return k_; }
  const SymbolKernel& remainder_kernel() const { return s_; }

 private:
  Parametrix p_;
  SymbolKernel k_, s_;
};

struct VolterraOptions {
  int k_max = 1;
  int nodes = 16;        // Gauss-Legendre nodes per simplex axis
  int grid = 1024;       // periodic z-grid for the first correction
  int chain_grid = 256;  // z-grid for k >= 2
};

struct VolterraResult {
  cplx value;                     // K_N + sum of corrections
  std::vector<cplx> corrections;  // index k: (-1)^k K_N * S_N^{*k}, slot 0 holds K_N
  double refinement_estimate = 0.0;
  bool converged = true;
  std::string diagnostic;
};

VolterraResult volterra_correct(const ApproximateHeatKernel& kn, double t, double x, double y,
                                const VolterraOptions& opts = {});

// Galerkin discretization of -d^2 + v on modes -K..K.
class SpectralHeatOracle {
 public:
  SpectralHeatOracle(const FourierSeries& v, int modes);

  int modes() const { return modes_; }
  const Eigen::VectorXd& eigenvalues() const { return evals_; }
  cplx kernel(double t, double x, double y) const;
  double diagonal(double t, double x) const;
  // contribution bound of the highest retained mode
  double error_estimate(double t) const;
  // enough modes that e^{-t K^2} is negligible
  static int recommended_modes(double t_min);

 private:
  Eigen::VectorXcd basis_values(double x) const;

  int modes_;
  Eigen::VectorXd evals_;
  Mat vecs_;
};

struct OracleValue {
  cplx value;
  double error_estimate = 0.0;
};
OracleValue spectral_heat_oracle(const FourierSeries& v, double t, double x, double y, int modes);

// theta = f(x) d^l/dx^l applied before restricting to the diagonal.
struct ThetaOperator {
  FourierSeries coefficient = FourierSeries::constant(GaussianRational{1});
  int order = 0;
};

// integral of theta K_N(t, x, x) dx = sum_k t^{(k-l-1)/2} B_k, B_k = sqrt(pi) * exact
struct HeatCoefficient {
  int k = 0;
  GaussianRational sqrt_pi_multiple;
  cplx value;
  double t_exponent = 0.0;
};
std::vector<HeatCoefficient> heat_coefficients(const FourierSeries& v, int N, const ThetaOperator& theta = {});

enum class KernelSource { parametrix, volterra, spectral_oracle };
std::string to_string(KernelSource s);

// Values on a (t, x, y) grid, index ((it * nx) + ix) * ny + iy.
struct HeatKernel1D {
  std::vector<double> ts, xs, ys;
  std::vector<cplx> values;
  KernelSource source = KernelSource::parametrix;
  int order = 0;  // N for parametrix, k_max for volterra, modes for the oracle

  cplx at(std::size_t it, std::size_t ix, std::size_t iy) const;
  // max |K(t,x,y) - conj K(t,y,x)| over grid pairs present in both orders; needs xs == ys
  double symmetry_defect() const;
  json to_json() const;
};

HeatKernel1D parametrix_kernel_grid(const ApproximateHeatKernel& kn, const std::vector<double>& ts,
                                    const std::vector<double>& xs, const std::vector<double>& ys);
HeatKernel1D volterra_kernel_grid(const ApproximateHeatKernel& kn, const std::vector<double>& ts,
                                  const std::vector<double>& xs, const std::vector<double>& ys,
                                  const VolterraOptions& opts);
HeatKernel1D oracle_kernel_grid(const SpectralHeatOracle& oracle, const std::vector<double>& ts,
                                const std::vector<double>& xs, const std::vector<double>& ys);

// least-squares slope of log y against log x
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct ParametrixReportOptions {
  ParametrixScheme scheme = ParametrixScheme::principal;
  std::vector<double> ts;  // empty: 7 log-spaced points on [1e-3, 1e-1]
  int x_points = 64;
  double exponent_tolerance = 0.2;  // relative, on (N-1)/2
  bool volterra = true;
  double volterra_t = 0.05;
  VolterraOptions volterra_options;
};

ExperimentReport heat_parametrix_report(const FourierSeries& v, const std::string& potential_text, int N,
                                        const ParametrixReportOptions& opts = {});

}  // namespace sdet
