#include "sdet/linalg.hpp"

#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <unsupported/Eigen/MatrixFunctions>

namespace sdet {

double max_abs(const Mat& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

double largest_singular_value(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

double condition_number(const Mat& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("condition_number: matrix not square");
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  double lo = s(s.size() - 1);
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / lo;
}

int numerical_rank(const Mat& m, double abs_threshold) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > abs_threshold) ++r;
  return r;
}

ColumnSplit column_space_split(const Mat& m, double abs_threshold) {
  const Eigen::Index rows = m.rows();
  if (m.cols() == 0 || rows == 0) {
    return {Mat(rows, 0), Mat::Identity(rows, rows)};
  }
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > abs_threshold) ++r;
  const Mat& u = svd.matrixU();
  return {u.leftCols(r), u.rightCols(rows - r)};
}

Mat expm(const Mat& m) {
  if (m.size() == 0) return m;
  return m.exp();
}

namespace {

template <unsigned N>
QuadratureRule rule_from_boost() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  QuadratureRule q;
  // boost stores the nonnegative half; rebuild the full symmetric rule in ascending order
  for (std::size_t i = x.size(); i-- > 0;) {
    if (x[i] == 0.0) continue;
    q.nodes.push_back(-x[i]);
    q.weights.push_back(w[i]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    q.nodes.push_back(x[i]);
    q.weights.push_back(w[i]);
  }
  return q;
}

}  // namespace

QuadratureRule gauss_legendre(int n) {
  switch (n) {
    case 4: return rule_from_boost<4>();
    case 8: return rule_from_boost<8>();
    case 10: return rule_from_boost<10>();
    case 16: return rule_from_boost<16>();
    case 20: return rule_from_boost<20>();
    case 32: return rule_from_boost<32>();
    case 64: return rule_from_boost<64>();
    default:
      throw std::invalid_argument("gauss_legendre: unsupported node count " + std::to_string(n));
  }
}

QuadratureRule gauss_legendre(int n, double a, double b) {
  QuadratureRule q = gauss_legendre(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    q.nodes[i] = mid + half * q.nodes[i];
    q.weights[i] *= half;
  }
  return q;
}

}  // namespace sdet
