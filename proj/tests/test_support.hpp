#pragma once

#include <cmath>
#include <complex>
#include <initializer_list>
#include <vector>

#include "sdet/graded.hpp"

namespace testutil {

using sdet::cplx;
using sdet::GradedMap;
using sdet::GradedVectorSpace;
using sdet::Mat;

inline Mat mat(std::initializer_list<std::initializer_list<cplx>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
  Mat m(r, c);
  int i = 0;
  for (const auto& row : rows) {
    int j = 0;
    for (const auto& v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline Mat scalar(cplx v) { return Mat::Constant(1, 1, v); }

// dims (1,1) with d = [a] and delta = [b]
inline GradedMap toy_d(cplx a) {
  return GradedMap(GradedVectorSpace({1, 1}), 1, {scalar(a), Mat(0, 1)});
}
inline GradedMap toy_delta(cplx b) {
  return GradedMap(GradedVectorSpace({1, 1}), -1, {Mat(0, 1), scalar(b)});
}

// Plain Gaussian elimination determinant, independent of the library path.
inline cplx det_gauss(Mat a) {
  const int n = static_cast<int>(a.rows());
  cplx det = 1.0;
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(p, c))) p = r;
    if (a(p, c) == cplx(0.0)) return 0.0;
    if (p != c) {
      a.row(p).swap(a.row(c));
      det = -det;
    }
    det *= a(c, c);
    for (int r = c + 1; r < n; ++r) {
      const cplx f = a(r, c) / a(c, c);
      a.row(r) -= f * a.row(c);
    }
  }
  return det;
}

// Taylor series with scaling and squaring, independent of the library exponential.
inline Mat expm_taylor(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (norm > 0.1) {
    norm /= 2;
    ++squarings;
  }
  const Mat b = a / std::pow(2.0, squarings);
  Mat term = Mat::Identity(n, n), sum = Mat::Identity(n, n);
  for (int k = 1; k < 30; ++k) {
    term = term * b / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

inline double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testutil
