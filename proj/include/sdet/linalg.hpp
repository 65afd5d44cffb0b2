#pragma once

#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sdet {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// Largest entry modulus; 0 for empty matrices.
double max_abs(const Mat& m);

double largest_singular_value(const Mat& m);

// Ratio of extreme singular values of a square matrix (infinity if singular).
double condition_number(const Mat& m);

int numerical_rank(const Mat& m, double abs_threshold);

// Orthonormal bases of the column space of m and of its orthogonal complement
// in the target space, split at the given absolute singular-value threshold.
struct ColumnSplit {
  Mat range;
  Mat complement;
};
ColumnSplit column_space_split(const Mat& m, double abs_threshold);

// exp(m) by scaling and squaring with Pade approximants.
Mat expm(const Mat& m);

// Gauss-Legendre rule; supported sizes 4, 8, 10, 16, 20, 32, 64.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
QuadratureRule gauss_legendre(int n);
QuadratureRule gauss_legendre(int n, double a, double b);

}  // namespace sdet
