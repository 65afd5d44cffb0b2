#include "sdet/hodge.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "sdet/complex_io.hpp"

namespace sdet {

namespace {

double sign_of_degree(int k) { return k % 2 == 0 ? 1.0 : -1.0; }

Mat hermitian_part(const Mat& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace

std::string to_string(PathType p) {
  switch (p) {
    case PathType::constant:
      return "constant";
    case PathType::exp_linear:
      return "exp_linear";
    case PathType::polynomial:
      return "polynomial";
  }
  return "constant";
}

PathType path_type_from_string(const std::string& s) {
  if (s == "constant") return PathType::constant;
  if (s == "exp_linear") return PathType::exp_linear;
  if (s == "polynomial") return PathType::polynomial;
  throw std::invalid_argument("unknown metric path type '" + s + "' (constant|exp_linear|polynomial)");
}

void check_positive_definite(const Mat& g, int degree) {
  if (g.rows() != g.cols()) throw std::invalid_argument("metric error: Gram matrix not square");
  if (g.rows() == 0) return;
  const double scale = std::max(1.0, max_abs(g));
  if (max_abs(g - g.adjoint()) > 1e-12 * scale)
    throw std::invalid_argument("metric error: Gram matrix at degree " + std::to_string(degree) + " not Hermitian");
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(g), Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 1e-10))
    throw std::invalid_argument("metric error: Gram matrix at degree " + std::to_string(degree) +
                                " not positive definite");
}

double log_det_hpd(const Mat& g) {
  if (g.rows() == 0) return 0.0;
  Eigen::LLT<Mat> llt(hermitian_part(g));
  if (llt.info() != Eigen::Success) throw std::invalid_argument("metric error: Gram matrix not positive definite");
  double s = 0.0;
  const Mat& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) s += 2.0 * std::log(l(i, i).real());
  return s;
}

MetricFamily::MetricFamily(PathType type, std::vector<Mat> a, std::vector<Mat> b, std::vector<std::vector<Mat>> poly)
    : type_(type), a_(std::move(a)), b_(std::move(b)), poly_(std::move(poly)) {
  if (type_ == PathType::polynomial) {
    a_.resize(poly_.size());
    for (std::size_t k = 0; k < poly_.size(); ++k) {
      if (poly_[k].empty()) throw std::invalid_argument("polynomial metric needs at least one coefficient per degree");
      const auto n = poly_[k][0].rows();
      for (const auto& c : poly_[k])
        if (c.rows() != n || c.cols() != n) throw std::invalid_argument("polynomial metric coefficients differ in shape");
      a_[k] = poly_[k][0];
    }
  }
  if (a_.size() < 2) throw std::invalid_argument("metric family needs at least two degrees");
  for (std::size_t k = 0; k < a_.size(); ++k) {
    if (a_[k].rows() != a_[k].cols()) throw std::invalid_argument("metric matrices must be square");
    if (type_ == PathType::exp_linear) {
      if (b_.size() != a_.size() || b_[k].rows() != a_[k].rows() || b_[k].cols() != a_[k].cols())
        throw std::invalid_argument("exp_linear metric: factor and generator shapes differ");
      const double scale = std::max(1.0, max_abs(b_[k]));
      if (max_abs(b_[k] - b_[k].adjoint()) > 1e-12 * scale)
        throw std::invalid_argument("exp_linear metric: generator must be Hermitian");
    }
  }
  // validates positivity at tau = 0
  const auto g0 = raw_grams(0.0);
  for (std::size_t k = 0; k < g0.size(); ++k) check_positive_definite(g0[k], static_cast<int>(k));
}

MetricFamily MetricFamily::constant(std::vector<Mat> grams) {
  return MetricFamily(PathType::constant, std::move(grams), {}, {});
}

MetricFamily MetricFamily::exp_linear(std::vector<Mat> factors, std::vector<Mat> generators) {
  return MetricFamily(PathType::exp_linear, std::move(factors), std::move(generators), {});
}

MetricFamily MetricFamily::polynomial(std::vector<std::vector<Mat>> coeffs) {
  return MetricFamily(PathType::polynomial, {}, {}, std::move(coeffs));
}

int MetricFamily::dim(int k) const { return static_cast<int>(a_.at(static_cast<std::size_t>(k)).rows()); }

std::vector<Mat> MetricFamily::raw_grams(double tau) const {
  std::vector<Mat> g;
  for (std::size_t k = 0; k < a_.size(); ++k) {
    switch (type_) {
      case PathType::constant:
        g.push_back(a_[k]);
        break;
      case PathType::exp_linear:
        g.push_back(a_[k].adjoint() * expm(tau * b_[k]) * a_[k]);
        break;
      case PathType::polynomial: {
        Mat s = Mat::Zero(a_[k].rows(), a_[k].cols());
        double p = 1.0;
        for (const auto& c : poly_[k]) {
          s += p * c;
          p *= tau;
        }
        g.push_back(s);
        break;
      }
    }
  }
  return g;
}

std::vector<Mat> MetricFamily::raw_derivatives(double tau) const {
  std::vector<Mat> g;
  for (std::size_t k = 0; k < a_.size(); ++k) {
    switch (type_) {
      case PathType::constant:
        g.push_back(Mat::Zero(a_[k].rows(), a_[k].cols()));
        break;
      case PathType::exp_linear:
        g.push_back(a_[k].adjoint() * b_[k] * expm(tau * b_[k]) * a_[k]);
        break;
      case PathType::polynomial: {
        Mat s = Mat::Zero(a_[k].rows(), a_[k].cols());
        double p = 1.0;
        for (std::size_t j = 1; j < poly_[k].size(); ++j) {
          s += static_cast<double>(j) * p * poly_[k][j];
          p *= tau;
        }
        g.push_back(s);
        break;
      }
    }
  }
  return g;
}

double MetricFamily::raw_supervolume(double tau) const {
  double v = 0.0;
  if (type_ == PathType::exp_linear) {
    // log det(B* e^{tau H} B) = log |det B|^2 + tau tr H
    for (std::size_t k = 0; k < a_.size(); ++k) {
      if (a_[k].rows() == 0) continue;
      v += sign_of_degree(static_cast<int>(k)) *
           (2.0 * std::log(std::abs(a_[k].determinant())) + tau * b_[k].trace().real());
    }
    return v;
  }
  const auto g = raw_grams(tau);
  for (std::size_t k = 0; k < g.size(); ++k) v += sign_of_degree(static_cast<int>(k)) * log_det_hpd(g[k]);
  return v;
}

double MetricFamily::raw_supervolume_derivative(double tau) const {
  double v = 0.0;
  if (type_ == PathType::constant) return 0.0;
  if (type_ == PathType::exp_linear) {
    for (std::size_t k = 0; k < a_.size(); ++k) v += sign_of_degree(static_cast<int>(k)) * b_[k].trace().real();
    return v;
  }
  const auto g = raw_grams(tau);
  const auto dg = raw_derivatives(tau);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g[k].rows() == 0) continue;
    v += sign_of_degree(static_cast<int>(k)) * g[k].llt().solve(dg[k]).trace().real();
  }
  return v;
}

double MetricFamily::log_rescale(double tau) const {
  if (!rescale_) return 0.0;
  const int k = rescale_->degree;
  return sign_of_degree(k) * (rescale_->base_volume - raw_supervolume(tau)) / dim(k);
}

std::vector<Mat> MetricFamily::grams(double tau) const {
  auto g = raw_grams(tau);
  if (rescale_) g[static_cast<std::size_t>(rescale_->degree)] *= std::exp(log_rescale(tau));
  for (std::size_t k = 0; k < g.size(); ++k) check_positive_definite(g[k], static_cast<int>(k));
  return g;
}

std::vector<Mat> MetricFamily::gram_derivatives(double tau) const {
  auto dg = raw_derivatives(tau);
  if (rescale_) {
    const int k = rescale_->degree;
    const auto uk = static_cast<std::size_t>(k);
    const double ell = log_rescale(tau);
    const double dell = -sign_of_degree(k) * raw_supervolume_derivative(tau) / dim(k);
    const Mat gk = raw_grams(tau)[uk];
    dg[uk] = std::exp(ell) * (dell * gk + dg[uk]);
  }
  return dg;
}

double MetricFamily::supervolume(double tau) const {
  const auto g = grams(tau);
  double v = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) v += sign_of_degree(static_cast<int>(k)) * log_det_hpd(g[k]);
  return v;
}

double MetricFamily::supervolume_derivative(double tau) const {
  const auto g = grams(tau);
  const auto dg = gram_derivatives(tau);
  double v = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g[k].rows() == 0) continue;
    v += sign_of_degree(static_cast<int>(k)) * g[k].llt().solve(dg[k]).trace().real();
  }
  return v;
}

MetricFamily supervolume_normalize(const MetricFamily& family) {
  MetricFamily out = family;
  out.rescale_.reset();
  int top = -1;
  for (int k = 0; k < out.degree_count(); ++k)
    if (out.dim(k) > 0) top = k;
  if (top < 0) return out;
  out.rescale_ = MetricFamily::Rescale{top, out.raw_supervolume(0.0)};
  return out;
}

json MetricFamily::to_json() const {
  json j = {{"type", sdet::to_string(type_)}};
  auto mats = [](const std::vector<Mat>& v) {
    json a = json::array();
    for (const auto& m : v) a.push_back(matrix_to_json(m));
    return a;
  };
  switch (type_) {
    case PathType::constant:
      j["grams"] = mats(a_);
      break;
    case PathType::exp_linear:
      j["factors"] = mats(a_);
      j["generators"] = mats(b_);
      break;
    case PathType::polynomial: {
      json c = json::array();
      for (const auto& p : poly_) c.push_back(mats(p));
      j["coeffs"] = c;
      break;
    }
  }
  if (rescale_) j["normalize"] = true;
  return j;
}

MetricFamily MetricFamily::from_json(const json& j) {
  const PathType type = path_type_from_string(j.at("type").get<std::string>());
  auto mats = [](const json& a) {
    std::vector<Mat> v;
    for (const auto& m : a) v.push_back(matrix_from_json(m));
    return v;
  };
  std::optional<MetricFamily> f;
  switch (type) {
    case PathType::constant:
      f = constant(mats(j.at("grams")));
      break;
    case PathType::exp_linear: {
      std::vector<Mat> gens = mats(j.at("generators"));
      std::vector<Mat> factors;
      if (j.contains("factors")) {
        factors = mats(j.at("factors"));
      } else {
        for (const auto& h : gens) factors.push_back(Mat::Identity(h.rows(), h.cols()));
      }
      f = exp_linear(std::move(factors), std::move(gens));
      break;
    }
    case PathType::polynomial: {
      std::vector<std::vector<Mat>> c;
      for (const auto& p : j.at("coeffs")) c.push_back(mats(p));
      f = polynomial(std::move(c));
      break;
    }
  }
  if (j.value("normalize", false)) return supervolume_normalize(*f);
  return *f;
}

GradedMap adjoint_codifferential(const GradedMap& d, const std::vector<Mat>& grams) {
  if (d.shift() != 1) throw std::invalid_argument("adjoint_codifferential: d must have degree +1");
  const int n = d.top_degree();
  if (static_cast<int>(grams.size()) != n + 1) throw std::invalid_argument("adjoint_codifferential: one Gram per degree");
  for (int k = 0; k <= n; ++k) {
    if (grams[static_cast<std::size_t>(k)].rows() != d.space().dim(k))
      throw std::invalid_argument("adjoint_codifferential: Gram shape does not match degree " + std::to_string(k));
    check_positive_definite(grams[static_cast<std::size_t>(k)], k);
  }
  GradedMap delta(d.space(), -1);
  for (int k = 1; k <= n; ++k) {
    const Mat& gl = grams[static_cast<std::size_t>(k - 1)];
    const Mat rhs = d.block(k - 1).adjoint() * grams[static_cast<std::size_t>(k)];
    delta.block(k) = gl.rows() > 0 ? Mat(gl.llt().solve(rhs)) : rhs;
  }
  return delta;
}

GradedMap hodge_laplacian(const GradedMap& d, const std::vector<Mat>& grams) {
  return graded_commutator(adjoint_codifferential(d, grams), d);
}

AdjointDiagnostic adjoint_diagnostics(const GradedMap& d, const std::vector<Mat>& grams, std::uint64_t seed) {
  AdjointDiagnostic r;
  const GradedMap delta = adjoint_codifferential(d, grams);
  const GradedMap lap = graded_commutator(delta, d);
  Rng rng(seed);
  const int n = d.top_degree();
  r.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= n; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const int dk = d.space().dim(k);
    if (k >= 1) {
      const int dl = d.space().dim(k - 1);
      for (int probe = 0; probe < 3; ++probe) {
        const Mat a = rng.complex_matrix(dl, 1), b = rng.complex_matrix(dk, 1);
        // <d a, b>_G against <a, delta b>_G
        const cplx lhs = ((d.block(k - 1) * a).adjoint() * grams[uk] * b)(0, 0);
        const cplx rhs = (a.adjoint() * grams[uk - 1] * delta.block(k) * b)(0, 0);
        r.adjointness_defect = std::max(r.adjointness_defect, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
      }
    }
    if (dk == 0) continue;
    const Mat gl = grams[uk] * lap.block(k);
    r.self_adjoint_defect = std::max(r.self_adjoint_defect, max_abs(gl - gl.adjoint()) / std::max(1.0, max_abs(gl)));
    Eigen::ComplexEigenSolver<Mat> es(lap.block(k), false);
    r.min_eigenvalue = std::min(r.min_eigenvalue, es.eigenvalues().real().minCoeff());
  }
  r.nilpotency = (delta * delta).max_abs();
  return r;
}

InnerVariation metric_inner_variation(const GradedMap& d, const MetricFamily& family) {
  const GradedVectorSpace space = d.space();
  if (family.degree_count() != space.top_degree() + 1)
    throw std::invalid_argument("metric family has the wrong number of degrees");
  const std::vector<Mat> g0 = family.grams(0.0);
  const double v0 = family.supervolume(0.0);
  InnerVariation v;
  v.mode = InnerVariation::Mode::conjugator;
  v.beta = [space, family, g0](double tau) {
    const auto g = family.grams(tau);
    GradedMap b(space, 0);
    for (int k = 0; k <= space.top_degree(); ++k) {
      const auto uk = static_cast<std::size_t>(k);
      if (g[uk].rows() > 0) b.block(k) = g[uk].llt().solve(g0[uk]);
    }
    return b;
  };
  v.theta = [space, family](double tau) {
    const auto g = family.grams(tau);
    const auto dg = family.gram_derivatives(tau);
    GradedMap th(space, 0);
    for (int k = 0; k <= space.top_degree(); ++k) {
      const auto uk = static_cast<std::size_t>(k);
      if (g[uk].rows() > 0) th.block(k) = -g[uk].llt().solve(dg[uk]);
    }
    return th;
  };
  // int_0^tau str theta = V(0) - V(tau)
  v.supertrace_integral = [family, v0](double tau) { return cplx(v0 - family.supervolume(tau)); };
  return v;
}

double conjugation_defect(const GradedMap& d, const MetricFamily& family, double tau) {
  const GradedMap delta0 = adjoint_codifferential(d, family.grams(0.0));
  const GradedMap direct = adjoint_codifferential(d, family.grams(tau));
  const GradedMap conj = inner_variation_path(delta0, metric_inner_variation(d, family), tau);
  return (direct - conj).max_abs() / std::max(1.0, direct.max_abs());
}

ExperimentReport torsion_anomaly_experiment(const GradedMap& d, const MetricFamily& family,
                                            const std::vector<double>& tau_grid) {
  ExperimentReport rep;
  rep.experiment = "hodge_anomaly";
  rep.config = {{"family", family.to_json()}, {"tau_grid", tau_grid}};
  const GradedMap delta0 = adjoint_codifferential(d, family.grams(0.0));
  const cplx sdet0 = sdet_restricted(graded_commutator(delta0, d), split_complement(delta0));
  const double v0 = family.supervolume(0.0);
  const cplx ledger0 = std::log(sdet0) + v0;
  const InnerVariation variation = metric_inner_variation(d, family);
  double max_ledger = 0.0, max_dev = 0.0, max_volume_drift = 0.0, max_conj = 0.0;
  for (double tau : tau_grid) {
    ReportRow row;
    row.label = "tau";
    row.inputs = {{"tau", tau}};
    row.provenance = Provenance::derived_oracle;
    row.tolerance = 1e-8;
    try {
      const auto g = family.grams(tau);
      const GradedMap delta = adjoint_codifferential(d, g);
      const GradedMap conj = inner_variation_path(delta0, variation, tau);
      const double conj_defect = (delta - conj).max_abs() / std::max(1.0, delta.max_abs());
      const cplx value = sdet_restricted(graded_commutator(delta, d), split_complement(delta));
      const double v = family.supervolume(tau);
      const cplx ledger = std::log(value) + v;
      const double err = std::abs(ledger - ledger0);
      max_ledger = std::max(max_ledger, err);
      max_dev = std::max(max_dev, std::abs(value - sdet0) / std::abs(sdet0));
      max_volume_drift = std::max(max_volume_drift, std::abs(v - v0));
      max_conj = std::max(max_conj, conj_defect);
      row.computed = {{"sdet", complex_to_json(value)},
                      {"log_sdet", complex_to_json(std::log(value))},
                      {"supervolume", v},
                      {"ledger", complex_to_json(ledger)},
                      {"conjugation_defect", conj_defect}};
      row.reference = {{"ledger", complex_to_json(ledger0)}};
      row.abs_error = err;
      row.rel_error = err / std::max(1.0, std::abs(ledger0));
      row.pass = err <= row.tolerance;
    } catch (const std::exception& e) {
      row.pass = false;
      row.computed = {{"error", e.what()}};
      rep.rows.push_back(row);
      rep.partial = true;
      rep.failure = std::string("regularity failure at tau = ") + std::to_string(tau) + ": " + e.what();
      break;
    }
    rep.rows.push_back(row);
  }
  const bool preserving = max_volume_drift <= 1e-12 * std::max(1.0, std::abs(v0));
  rep.summary = {{"sdet0", complex_to_json(sdet0)},
                 {"supervolume0", v0},
                 {"max_ledger_drift", max_ledger},
                 {"max_relative_sdet_deviation", max_dev},
                 {"max_supervolume_drift", max_volume_drift},
                 {"max_conjugation_defect", max_conj},
                 {"supervolume_preserving", preserving}};
  rep.add_verdict("anomaly_ledger", max_ledger, 1e-8, "|log sdet + sum (-1)^k log det G_k - value at 0|");
  rep.add_verdict("conjugation", max_conj, 1e-10, "adjoint delta_tau vs beta delta_0 beta^-1");
  if (preserving) rep.add_verdict("exact_constancy", max_dev, 1e-9, "max |sdet_tau - sdet_0| / |sdet_0|");
  return rep;
}

MetricFamily random_metric_family(const GradedVectorSpace& space, Rng& rng, double scale) {
  std::vector<Mat> factors, gens;
  for (int k = 0; k <= space.top_degree(); ++k) {
    const int n = space.dim(k);
    factors.push_back(rng.invertible(n));
    if (n == 0) {
      gens.push_back(Mat(0, 0));
      continue;
    }
    const Mat a = rng.complex_matrix(n, n);
    Mat h = hermitian_part(a);
    h *= scale / std::max(1e-12, largest_singular_value(h));
    gens.push_back(hermitian_part(h));
  }
  return MetricFamily::exp_linear(std::move(factors), std::move(gens));
}

std::vector<Mat> numeric_gram_derivative(const MetricFamily& family, double tau, double h) {
  auto central = [&](double step) {
    const auto plus = family.grams(tau + step), minus = family.grams(tau - step);
    std::vector<Mat> out;
    for (std::size_t k = 0; k < plus.size(); ++k) out.push_back((plus[k] - minus[k]) / (2.0 * step));
    return out;
  };
  const auto coarse = central(h), fine = central(h / 2.0);
  std::vector<Mat> out;
  for (std::size_t k = 0; k < coarse.size(); ++k) out.push_back((4.0 * fine[k] - coarse[k]) / 3.0);
  return out;
}

}  // namespace sdet
