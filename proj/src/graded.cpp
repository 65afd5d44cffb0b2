#include "sdet/graded.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sdet {

namespace {

std::string degree_msg(const char* what, int k) {
  return std::string(what) + ": dimension mismatch at degree " + std::to_string(k);
}

cplx det_of(const Mat& m) {
  if (m.size() == 0) return 1.0;
  return m.partialPivLu().determinant();
}

cplx int_power(cplx z, int e) {
  cplx r = 1.0;
  const bool neg = e < 0;
  for (int i = 0; i < std::abs(e); ++i) r *= z;
  return neg ? 1.0 / r : r;
}

double global_scale(const GradedMap& m) {
  double s = 0.0;
  for (const auto& b : m.blocks()) s = std::max(s, largest_singular_value(b));
  return s;
}

}  // namespace

// ---------------------------------------------------------------- spaces and maps

GradedVectorSpace::GradedVectorSpace(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw std::invalid_argument("graded space needs at least degrees 0 and 1");
  for (int d : dims_)
    if (d < 0) throw std::invalid_argument("graded space dimensions must be nonnegative");
}

int GradedVectorSpace::dim(int k) const { return contains(k) ? dims_[static_cast<std::size_t>(k)] : 0; }

GradedMap::GradedMap(GradedVectorSpace space, int shift) : space_(std::move(space)), shift_(shift) {
  for (int k = 0; k <= space_.top_degree(); ++k)
    blocks_.push_back(Mat::Zero(space_.dim(k + shift_), space_.dim(k)));
}

GradedMap::GradedMap(GradedVectorSpace space, int shift, std::vector<Mat> blocks)
    : space_(std::move(space)), shift_(shift), blocks_(std::move(blocks)) {
  const int n = space_.top_degree();
  if (static_cast<int>(blocks_.size()) != n + 1)
    throw std::invalid_argument("graded map needs one block per degree");
  for (int k = 0; k <= n; ++k) {
    Mat& b = blocks_[static_cast<std::size_t>(k)];
    const int rows = space_.dim(k + shift_), cols = space_.dim(k);
    // out-of-range targets may be given as empty matrices
    if (!space_.contains(k + shift_) && b.size() == 0) {
      b = Mat::Zero(0, cols);
      continue;
    }
    if (b.rows() != rows || b.cols() != cols) throw std::invalid_argument(degree_msg("graded map", k));
  }
}

GradedMap GradedMap::identity(const GradedVectorSpace& space) {
  GradedMap m(space, 0);
  for (int k = 0; k <= space.top_degree(); ++k) m.block(k) = Mat::Identity(space.dim(k), space.dim(k));
  return m;
}

const Mat& GradedMap::block(int k) const {
  if (!space_.contains(k)) throw std::out_of_range("graded map: degree " + std::to_string(k));
  return blocks_[static_cast<std::size_t>(k)];
}

Mat& GradedMap::block(int k) {
  if (!space_.contains(k)) throw std::out_of_range("graded map: degree " + std::to_string(k));
  return blocks_[static_cast<std::size_t>(k)];
}

void GradedMap::check_compatible(const GradedMap& o, const char* what) const {
  if (!(space_ == o.space_)) throw std::invalid_argument(std::string(what) + ": different graded spaces");
  if (shift_ != o.shift_) throw std::invalid_argument(std::string(what) + ": different shifts");
}

GradedMap GradedMap::operator+(const GradedMap& o) const {
  check_compatible(o, "graded sum");
  GradedMap r = *this;
  for (std::size_t k = 0; k < blocks_.size(); ++k) r.blocks_[k] += o.blocks_[k];
  return r;
}

GradedMap GradedMap::operator-(const GradedMap& o) const {
  check_compatible(o, "graded difference");
  GradedMap r = *this;
  for (std::size_t k = 0; k < blocks_.size(); ++k) r.blocks_[k] -= o.blocks_[k];
  return r;
}

GradedMap GradedMap::operator*(cplx c) const {
  GradedMap r = *this;
  for (auto& b : r.blocks_) b *= c;
  return r;
}

GradedMap GradedMap::operator*(const GradedMap& o) const {
  if (!(space_ == o.space_)) throw std::invalid_argument("graded composition: different graded spaces");
  GradedMap r(space_, shift_ + o.shift_);
  for (int k = 0; k <= space_.top_degree(); ++k) {
    const int mid = k + o.shift_;
    if (!space_.contains(mid) || !space_.contains(mid + shift_)) continue;
    const Mat& a = block(mid);
    const Mat& b = o.block(k);
    if (a.cols() != b.rows()) throw std::invalid_argument(degree_msg("graded composition", k));
    r.block(k) = a * b;
  }
  return r;
}

double GradedMap::max_abs() const {
  double m = 0.0;
  for (const auto& b : blocks_) m = std::max(m, sdet::max_abs(b));
  return m;
}

cplx GradedMap::supertrace() const {
  if (shift_ != 0) throw std::invalid_argument("supertrace needs a degree-preserving map");
  cplx s = 0.0;
  for (int k = 0; k <= top_degree(); ++k) s += (k % 2 == 0 ? 1.0 : -1.0) * block(k).trace();
  return s;
}

GradedMap GradedMap::inverse() const {
  if (shift_ != 0) throw std::invalid_argument("inverse needs a degree-preserving map");
  GradedMap r(space_, 0);
  for (int k = 0; k <= top_degree(); ++k) {
    const Mat& b = block(k);
    if (b.size() == 0) continue;
    if (condition_number(b) > 1e13)
      throw std::runtime_error("graded map not invertible at degree " + std::to_string(k));
    r.block(k) = b.partialPivLu().inverse();
  }
  return r;
}

// ---------------------------------------------------------------- pairing

PairingForm::PairingForm(GradedVectorSpace sp, std::vector<Mat> g, PairingSign s)
    : space(std::move(sp)), gram(std::move(g)), sign(s) {
  const int n = space.top_degree();
  if (static_cast<int>(gram.size()) != n + 1) throw std::invalid_argument("pairing needs one gram block per degree");
  for (int k = 0; k <= n; ++k) {
    const Mat& b = gram[static_cast<std::size_t>(k)];
    if (b.rows() != space.dim(k) || b.cols() != space.dim(n - k))
      throw std::invalid_argument(degree_msg("pairing", k));
    if (b.rows() != b.cols() || (b.size() > 0 && condition_number(b) > 1e13))
      throw std::invalid_argument("pairing degenerate at degree " + std::to_string(k));
  }
}

PairingForm PairingForm::identity(const GradedVectorSpace& space, PairingSign sign) {
  std::vector<Mat> g;
  const int n = space.top_degree();
  for (int k = 0; k <= n; ++k) g.push_back(Mat::Identity(space.dim(k), space.dim(n - k)));
  return PairingForm(space, std::move(g), sign);
}

// ---------------------------------------------------------------- core operations

GradedMap graded_commutator(const GradedMap& delta, const GradedMap& d) {
  if (delta.shift() != -1) throw std::invalid_argument("codifferential must have shift -1");
  if (d.shift() != 1) throw std::invalid_argument("differential must have shift +1");
  if (!(delta.space() == d.space())) throw std::invalid_argument("codifferential and differential on different spaces");
  const int n = d.top_degree();
  for (int k = 0; k < n; ++k) {
    if (d.block(k).rows() != delta.block(k + 1).cols()) throw std::invalid_argument(degree_msg("commutator", k));
  }
  return delta * d + d * delta;
}

CodifferentialDiagnostic check_codifferential(const GradedMap& delta, const GradedMap& d,
                                              const PairingForm& pairing) {
  CodifferentialDiagnostic r;
  r.delta_nilpotency = (delta * delta).max_abs();
  r.d_nilpotency = (d * d).max_abs();
  const int n = delta.top_degree();
  for (int k = 1; k <= n; ++k) {
    const Mat lhs = pairing.gram[static_cast<std::size_t>(k)] * delta.block(n - k + 1);
    const double s = (pairing.sign == PairingSign::alternating && k % 2 == 1) ? -1.0 : 1.0;
    const Mat rhs = s * delta.block(k).transpose() * pairing.gram[static_cast<std::size_t>(k - 1)];
    r.symmetry_defect = std::max(r.symmetry_defect, max_abs(lhs - rhs));
  }
  r.pass = r.delta_nilpotency <= 1e-10 && r.d_nilpotency <= 1e-10 && r.symmetry_defect <= 1e-10;
  return r;
}

AcyclicityResult acyclicity_check(const GradedMap& map) {
  const double scale = global_scale(map);
  if ((map * map).max_abs() > 1e-10 * std::max(1.0, scale * scale))
    throw std::invalid_argument("acyclicity_check: map does not square to zero");
  const double thr = kRankTolerance * scale;
  const int n = map.top_degree(), s = map.shift();
  std::vector<int> rank(static_cast<std::size_t>(n + 1), 0);
  for (int k = 0; k <= n; ++k) rank[static_cast<std::size_t>(k)] = numerical_rank(map.block(k), thr);
  AcyclicityResult r;
  r.acyclic = true;
  for (int k = 0; k <= n; ++k) {
    DegreeRank dr;
    dr.rank_out = rank[static_cast<std::size_t>(k)];
    dr.rank_in = map.space().contains(k - s) ? rank[static_cast<std::size_t>(k - s)] : 0;
    dr.kernel_dim = map.space().dim(k) - dr.rank_out;
    dr.homology_dim = dr.kernel_dim - dr.rank_in;
    if (dr.homology_dim != 0) r.acyclic = false;
    r.degrees.push_back(dr);
  }
  return r;
}

Mat Splitting::projector_C(int k) const {
  const Mat& p = projector_L.at(static_cast<std::size_t>(k));
  return Mat::Identity(p.rows(), p.cols()) - p;
}

int Splitting::euler_characteristic_L() const {
  int chi = 0;
  for (std::size_t k = 0; k < basis_L.size(); ++k)
    chi += (k % 2 == 0 ? 1 : -1) * static_cast<int>(basis_L[k].cols());
  return chi;
}

Splitting split_complement(const GradedMap& delta) {
  if (delta.shift() != -1) throw std::invalid_argument("split_complement: codifferential must have shift -1");
  if (!acyclicity_check(delta).acyclic)
    throw std::runtime_error("no isotropically-split complement computed: codifferential is not acyclic");
  const int n = delta.top_degree();
  const double thr = kRankTolerance * global_scale(delta);
  Splitting sp;
  for (int k = 0; k <= n; ++k) {
    const int dim = delta.space().dim(k);
    ColumnSplit cs = k < n ? column_space_split(delta.block(k + 1), thr)
                           : ColumnSplit{Mat(dim, 0), Mat::Identity(dim, dim)};
    sp.projector_L.push_back(cs.range * cs.range.adjoint());
    sp.basis_L.push_back(std::move(cs.range));
    sp.basis_C.push_back(std::move(cs.complement));
  }
  for (int k = 0; k <= n; ++k) {
    const Mat& c = sp.basis_C[static_cast<std::size_t>(k)];
    if (k == 0) {
      if (c.cols() != 0) throw std::runtime_error("split_complement: complement in degree 0 is nonzero");
      sp.delta_condition.push_back(1.0);
      continue;
    }
    const Mat& l = sp.basis_L[static_cast<std::size_t>(k - 1)];
    if (l.cols() != c.cols())
      throw std::runtime_error("split_complement: delta restricted to C is not bijective at degree " +
                               std::to_string(k));
    const Mat m = l.adjoint() * delta.block(k) * c;
    const double cond = condition_number(m);
    if (!std::isfinite(cond) || cond > 1e12)
      throw std::runtime_error("split_complement: delta restricted to C is singular at degree " +
                               std::to_string(k));
    sp.delta_condition.push_back(cond);
  }
  return sp;
}

SdetDetail sdet_restricted_detail(const GradedMap& D, const Splitting& split) {
  if (D.shift() != 0) throw std::invalid_argument("sdet_restricted: operator must preserve degree");
  const int n = D.top_degree();
  if (static_cast<int>(split.basis_L.size()) != n + 1)
    throw std::invalid_argument("sdet_restricted: splitting does not match the operator");
  SdetDetail r;
  r.value = 1.0;
  r.crosscheck = 1.0;
  for (int k = 0; k <= n; ++k) {
    const Mat& dk = D.block(k);
    const Mat& q = split.basis_L[static_cast<std::size_t>(k)];
    const double scale = std::max(1.0, max_abs(dk));
    if (q.cols() > 0) {
      const Mat restricted = q.adjoint() * dk * q;
      r.invariance_defect = std::max(r.invariance_defect, max_abs(dk * q - q * restricted) / scale);
      Eigen::JacobiSVD<Mat> svd(restricted);
      const auto& sv = svd.singularValues();
      if (sv(sv.size() - 1) <= 1e-12 * std::max(1.0, sv(0)))
        throw std::runtime_error("non-regular codifferential: D restricted to im(delta) is singular at degree " +
                                 std::to_string(k));
      const cplx det = det_of(restricted);
      r.restricted_dets.push_back(det);
      r.value *= (k % 2 == 0) ? det : 1.0 / det;
    } else {
      r.restricted_dets.push_back(1.0);
    }
    const int e = (k % 2 == 0 ? -1 : 1) * k;
    if (e != 0) r.crosscheck *= int_power(det_of(dk), e);
  }
  if (r.invariance_defect > 1e-10)
    throw std::invalid_argument("sdet_restricted: D does not leave im(delta) invariant");
  r.crosscheck_rel = std::abs(r.value - r.crosscheck) / std::abs(r.value);
  if (!(r.crosscheck_rel <= 1e-9))
    throw std::runtime_error("sdet_restricted: full-space cross-check disagrees (relative " +
                             std::to_string(r.crosscheck_rel) + ")");
  return r;
}

cplx sdet_restricted(const GradedMap& D, const Splitting& split) { return sdet_restricted_detail(D, split).value; }

SupertraceDetail restricted_supertrace_detail(const GradedMap& D, const Splitting& split, double t) {
  if (!(t > 0)) throw std::invalid_argument("restricted_supertrace: t must be positive");
  if (D.shift() != 0) throw std::invalid_argument("restricted_supertrace: operator must preserve degree");
  const int n = D.top_degree();
  SupertraceDetail r;
  double scale = 0.0;
  for (int k = 0; k <= n; ++k) {
    const Mat e = expm(-t * D.block(k));
    const Mat& q = split.basis_L[static_cast<std::size_t>(k)];
    const double sign = k % 2 == 0 ? 1.0 : -1.0;
    if (q.cols() > 0) r.restricted += sign * (q.adjoint() * e * q).trace();
    const cplx tr = e.trace();
    r.full_space += -sign * static_cast<double>(k) * tr;
    scale = std::max(scale, std::abs(tr));
  }
  scale = std::max({scale, std::abs(r.restricted), std::abs(r.full_space)});
  r.rel_defect = scale > 0 ? std::abs(r.restricted - r.full_space) / scale : 0.0;
  if (!(r.rel_defect <= 1e-10))
    throw std::runtime_error("restricted_supertrace: restricted and full-space formulas disagree");
  return r;
}

cplx restricted_supertrace(const GradedMap& D, const Splitting& split, double t) {
  return restricted_supertrace_detail(D, split, t).restricted;
}

// ---------------------------------------------------------------- Duhamel

GradedMap OperatorFamily::derivative_at(double tau) const {
  if (derivative) return derivative(tau);
  return (value(tau + fd_step) - value(tau - fd_step)) * cplx(1.0 / (2.0 * fd_step));
}

GradedMap heat_operator(const GradedMap& D, double t) {
  if (D.shift() != 0) throw std::invalid_argument("heat_operator: operator must preserve degree");
  GradedMap r(D.space(), 0);
  for (int k = 0; k <= D.top_degree(); ++k) r.block(k) = expm(-t * D.block(k));
  return r;
}

GradedMap duhamel_derivative(const OperatorFamily& family, double tau, double t, int quadrature_nodes) {
  const GradedMap D = family.value(tau);
  const GradedMap Ddot = family.derivative_at(tau);
  if (!(D.space() == Ddot.space()) || D.shift() != 0 || Ddot.shift() != 0)
    throw std::invalid_argument("duhamel_derivative: family and derivative shapes differ");
  const QuadratureRule q = gauss_legendre(quadrature_nodes, 0.0, t);
  GradedMap r(D.space(), 0);
  for (int k = 0; k <= D.top_degree(); ++k) {
    const Mat& dk = D.block(k);
    if (dk.size() == 0) continue;
    Mat acc = Mat::Zero(dk.rows(), dk.cols());
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
      const double u = q.nodes[i];
      acc += q.weights[i] * (expm(-(t - u) * dk) * Ddot.block(k) * expm(-u * dk));
    }
    r.block(k) = -acc;
  }
  return r;
}

GradedMap heat_central_difference(const OperatorFamily& family, double tau, double t, double h) {
  return (heat_operator(family.value(tau + h), t) - heat_operator(family.value(tau - h), t)) *
         cplx(1.0 / (2.0 * h));
}

// ---------------------------------------------------------------- inner variations

InnerVariation InnerVariation::zero(const GradedVectorSpace& space) {
  InnerVariation v;
  v.mode = Mode::conjugator;
  v.theta = [space](double) { return GradedMap(space, 0); };
  v.beta = [space](double) { return GradedMap::identity(space); };
  v.supertrace_integral = [](double) { return cplx(0.0); };
  return v;
}

InnerVariation InnerVariation::constant(const GradedMap& generator, Mode mode) {
  if (generator.shift() != 0) throw std::invalid_argument("inner variation generator must preserve degree");
  InnerVariation v;
  v.mode = mode;
  v.theta = [generator](double) { return generator; };
  v.beta = [generator](double tau) {
    GradedMap b(generator.space(), 0);
    for (int k = 0; k <= generator.top_degree(); ++k) b.block(k) = expm(tau * generator.block(k));
    return b;
  };
  const cplx st = generator.supertrace();
  v.supertrace_integral = [st](double tau) { return tau * st; };
  return v;
}

InnerVariation InnerVariation::polynomial_generator(std::vector<GradedMap> coeffs) {
  if (coeffs.empty()) throw std::invalid_argument("polynomial generator needs at least one coefficient");
  for (const auto& c : coeffs)
    if (c.shift() != 0) throw std::invalid_argument("inner variation generator must preserve degree");
  InnerVariation v;
  v.mode = Mode::generator;
  v.theta = [coeffs](double tau) {
    GradedMap r = coeffs.back();
    for (std::size_t j = coeffs.size() - 1; j-- > 0;) r = r * cplx(tau) + coeffs[j];
    return r;
  };
  std::vector<cplx> st;
  for (const auto& c : coeffs) st.push_back(c.supertrace());
  v.supertrace_integral = [st](double tau) {
    cplx s = 0.0;
    for (std::size_t j = 0; j < st.size(); ++j)
      s += st[j] * std::pow(tau, static_cast<double>(j + 1)) / static_cast<double>(j + 1);
    return s;
  };
  return v;
}

InnerVariation InnerVariation::polynomial_conjugator(std::vector<GradedMap> coeffs) {
  if (coeffs.empty()) throw std::invalid_argument("polynomial conjugator needs at least one coefficient");
  const GradedVectorSpace space = coeffs.front().space();
  auto beta = [coeffs, space](double tau) {
    GradedMap r = GradedMap::identity(space);
    double p = 1.0;
    for (const auto& c : coeffs) {
      p *= tau;
      r = r + c * cplx(p);
    }
    return r;
  };
  auto beta_dot = [coeffs, space](double tau) {
    GradedMap r(space, 0);
    double p = 1.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      r = r + coeffs[j] * cplx(static_cast<double>(j + 1) * p);
      p *= tau;
    }
    return r;
  };
  InnerVariation v;
  v.mode = Mode::conjugator;
  v.beta = beta;
  v.theta = [beta, beta_dot](double tau) { return beta_dot(tau) * beta(tau).inverse(); };
  v.supertrace_integral = [beta](double tau) {
    const GradedMap b = beta(tau);
    cplx s = 0.0;
    for (int k = 0; k <= b.top_degree(); ++k)
      if (b.block(k).size() > 0) s += (k % 2 == 0 ? 1.0 : -1.0) * std::log(det_of(b.block(k)));
    return s;
  };
  return v;
}

GradedMap inner_variation_path(const GradedMap& delta0, const InnerVariation& variation, double tau,
                               const PathOptions& options) {
  if (delta0.shift() != -1) throw std::invalid_argument("inner_variation_path: codifferential must have shift -1");
  if (variation.mode == InnerVariation::Mode::conjugator) {
    if (!variation.beta) throw std::invalid_argument("conjugator mode needs beta");
    const GradedMap b = variation.beta(tau);
    GradedMap binv(b.space(), 0);
    try {
      binv = b.inverse();
    } catch (const std::runtime_error&) {
      throw std::runtime_error("inner variation: beta is not invertible at tau = " + std::to_string(tau));
    }
    return b * delta0 * binv;
  }
  if (!variation.theta) throw std::invalid_argument("generator mode needs theta");
  auto rhs = [&](double s, const GradedMap& y) {
    const GradedMap th = variation.theta(s);
    return th * y - y * th;
  };
  auto rk4 = [&](const GradedMap& y, double s, double h) {
    const GradedMap k1 = rhs(s, y);
    const GradedMap k2 = rhs(s + 0.5 * h, y + k1 * cplx(0.5 * h));
    const GradedMap k3 = rhs(s + 0.5 * h, y + k2 * cplx(0.5 * h));
    const GradedMap k4 = rhs(s + h, y + k3 * cplx(h));
    return y + (k1 + k2 * cplx(2.0) + k3 * cplx(2.0) + k4) * cplx(h / 6.0);
  };
  GradedMap y = delta0;
  double s = 0.0;
  const double dir = tau >= 0 ? 1.0 : -1.0;
  double h = options.initial_step;
  int guard = 0;
  while (dir * (tau - s) > 1e-15) {
    if (++guard > 1000000) throw std::runtime_error("inner_variation_path: step control failed");
    const double step = dir * std::min(h, dir * (tau - s));
    const GradedMap full = rk4(y, s, step);
    const GradedMap half = rk4(rk4(y, s, 0.5 * step), s + 0.5 * step, 0.5 * step);
    const double err = (half - full).max_abs() / 15.0 / std::max(1.0, half.max_abs());
    if (err <= options.local_error) {
      y = half + (half - full) * cplx(1.0 / 15.0);
      s += step;
      const double grow = err > 0 ? 0.9 * std::pow(options.local_error / err, 0.2) : 4.0;
      h = std::abs(step) * std::min(4.0, grow);
    } else {
      h = std::abs(step) * std::max(0.1, 0.9 * std::pow(options.local_error / err, 0.2));
    }
  }
  return y;
}

cplx supertrace_integral(const InnerVariation& variation, double tau) {
  if (variation.supertrace_integral) return variation.supertrace_integral(tau);
  if (tau == 0.0) return 0.0;
  const int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(tau) / 0.05)));
  cplx s = 0.0;
  for (int p = 0; p < pieces; ++p) {
    const double a = tau * p / pieces, b = tau * (p + 1) / pieces;
    const QuadratureRule q = gauss_legendre(16, a, b);
    for (std::size_t i = 0; i < q.nodes.size(); ++i) s += q.weights[i] * variation.theta(q.nodes[i]).supertrace();
  }
  return s;
}

ExperimentReport constancy_report(const GradedMap& delta0, const GradedMap& d, const InnerVariation& variation,
                                  const std::vector<double>& tau_grid) {
  ExperimentReport rep;
  rep.experiment = "constancy";
  const GradedMap D0 = graded_commutator(delta0, d);
  const cplx sdet0 = sdet_restricted(D0, split_complement(delta0));
  double max_dev = 0.0, max_anomaly = 0.0;
  bool supertraceless = true;
  for (double tau : tau_grid) {
    ReportRow row;
    row.label = "tau";
    row.inputs = {{"tau", tau}};
    row.provenance = Provenance::derived_oracle;
    row.tolerance = 1e-8;
    try {
      const GradedMap th = variation.theta(tau);
      const cplx st = th.supertrace();
      if (std::abs(st) > 1e-12 * std::max(1.0, th.max_abs())) supertraceless = false;
      const GradedMap delta = inner_variation_path(delta0, variation, tau);
      const GradedMap D = graded_commutator(delta, d);
      const cplx value = sdet_restricted(D, split_complement(delta));
      const cplx integral = supertrace_integral(variation, tau);
      const cplx predicted = sdet0 * std::exp(integral);
      const double anomaly = std::abs(std::log(value / predicted));
      const double dev = std::abs(value - sdet0) / std::abs(sdet0);
      max_dev = std::max(max_dev, dev);
      max_anomaly = std::max(max_anomaly, anomaly);
      row.computed = {{"sdet", complex_to_json(value)},
                      {"str_theta", complex_to_json(st)},
                      {"str_theta_integral", complex_to_json(integral)},
                      {"delta_nilpotency", (delta * delta).max_abs()}};
      row.reference = {{"anomaly_prediction", complex_to_json(predicted)}};
      row.abs_error = std::abs(value - predicted);
      row.rel_error = anomaly;
      row.pass = anomaly <= row.tolerance;
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
  rep.summary = {{"sdet0", complex_to_json(sdet0)},
                 {"max_relative_deviation", max_dev},
                 {"max_anomaly_error", max_anomaly},
                 {"supertraceless", supertraceless}};
  rep.add_verdict("anomaly_law", max_anomaly, 1e-8, "|log sdet_tau - log sdet_0 - int str theta|");
  if (supertraceless)
    rep.add_verdict("exact_constancy", max_dev, 1e-9, "max |sdet_tau - sdet_0| / |sdet_0|");
  return rep;
}

}  // namespace sdet
