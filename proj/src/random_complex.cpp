#include "sdet/random_complex.hpp"

#include <cmath>
#include <stdexcept>

namespace sdet {

double Rng::uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

int Rng::uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

double Rng::normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

cplx Rng::complex_normal() {
  const double re = normal();
  const double im = normal();
  return {re / std::sqrt(2.0), im / std::sqrt(2.0)};
}

Mat Rng::complex_matrix(int rows, int cols) {
  Mat m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = complex_normal();
  return m;
}

Mat Rng::unitary(int n) {
  if (n == 0) return Mat(0, 0);
  Eigen::HouseholderQR<Mat> qr(complex_matrix(n, n));
  return qr.householderQ() * Mat::Identity(n, n);
}

Mat Rng::invertible(int n) {
  Mat t = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double mag = uniform(0.6, 1.6);
    const double phase = uniform(0.0, 2.0 * M_PI);
    t(i, i) = std::polar(mag, phase);
    for (int j = i + 1; j < n; ++j) t(i, j) = 0.3 * complex_normal();
  }
  return unitary(n) * t;
}

Mat Rng::positive_definite(int n) {
  const Mat a = complex_matrix(n, n);
  Mat g = Mat::Identity(n, n) * 0.5 + a * a.adjoint() * (0.5 / std::max(1, n));
  return 0.5 * (g + g.adjoint());
}

GradedVectorSpace acyclic_space_from_ranks(const std::vector<int>& ranks) {
  if (ranks.empty()) throw std::invalid_argument("need at least one rank");
  std::vector<int> dims;
  for (std::size_t k = 0; k <= ranks.size(); ++k) {
    const int below = k > 0 ? ranks[k - 1] : 0;
    const int above = k < ranks.size() ? ranks[k] : 0;
    dims.push_back(below + above);
  }
  return GradedVectorSpace(dims);
}

namespace {

struct Frame {
  std::vector<int> ranks;
  GradedVectorSpace space;
  std::vector<Mat> basis;      // P_k
  std::vector<Mat> basis_inv;  // P_k^{-1}
};

Frame random_frame(Rng& rng, const RandomComplexOptions& o) {
  const int degrees = rng.uniform_int(o.min_degrees, o.max_degrees);
  const int max_rank = std::max(1, o.max_dim / 2);
  std::vector<int> ranks;
  for (int k = 0; k + 1 < degrees; ++k) ranks.push_back(rng.uniform_int(1, max_rank));
  GradedVectorSpace space = acyclic_space_from_ranks(ranks);
  std::vector<Mat> p, pinv;
  for (int k = 0; k <= space.top_degree(); ++k) {
    Mat b = rng.invertible(space.dim(k));
    pinv.push_back(b.partialPivLu().inverse());
    p.push_back(std::move(b));
  }
  return {ranks, space, p, pinv};
}

// In the adapted frame degree k splits as (image from below: r_{k-1}) + (rest: r_k).
// The differential maps the second part isomorphically onto the first part of degree k+1.
GradedMap frame_differential(const Frame& f, Rng& rng) {
  GradedMap d(f.space, 1);
  for (int k = 0; k + 1 <= f.space.top_degree(); ++k) {
    const int r = f.ranks[static_cast<std::size_t>(k)];
    const int below = k > 0 ? f.ranks[static_cast<std::size_t>(k - 1)] : 0;
    Mat e = Mat::Zero(f.space.dim(k + 1), f.space.dim(k));
    e.block(0, below, r, r) = rng.invertible(r);
    d.block(k) = f.basis[static_cast<std::size_t>(k + 1)] * e * f.basis_inv[static_cast<std::size_t>(k)];
  }
  return d;
}

GradedMap frame_codifferential(const Frame& f, Rng& rng) {
  GradedMap delta(f.space, -1);
  for (int k = 1; k <= f.space.top_degree(); ++k) {
    const int r = f.ranks[static_cast<std::size_t>(k - 1)];
    const int below = k > 1 ? f.ranks[static_cast<std::size_t>(k - 2)] : 0;
    Mat e = Mat::Zero(f.space.dim(k - 1), f.space.dim(k));
    e.block(below, 0, r, r) = rng.invertible(r);
    delta.block(k) = f.basis[static_cast<std::size_t>(k - 1)] * e * f.basis_inv[static_cast<std::size_t>(k)];
  }
  return delta;
}

}  // namespace

ComplexPair random_acyclic_pair(std::uint64_t seed, const RandomComplexOptions& options) {
  Rng rng(seed);
  const Frame f = random_frame(rng, options);
  GradedMap d = frame_differential(f, rng);
  GradedMap delta = frame_codifferential(f, rng);
  return {std::move(d), std::move(delta)};
}

GradedMap random_acyclic_differential(std::uint64_t seed, const RandomComplexOptions& options) {
  Rng rng(seed);
  const Frame f = random_frame(rng, options);
  return frame_differential(f, rng);
}

GradedMap random_degree_preserving(const GradedVectorSpace& space, Rng& rng, double scale) {
  GradedMap m(space, 0);
  for (int k = 0; k <= space.top_degree(); ++k)
    m.block(k) = rng.complex_matrix(space.dim(k), space.dim(k)) * scale;
  return m;
}

GradedMap random_supertraceless(const GradedVectorSpace& space, Rng& rng, double scale) {
  GradedMap m = random_degree_preserving(space, rng, scale);
  int k0 = 0;
  while (space.dim(k0) == 0) ++k0;
  const cplx st = m.supertrace();
  const double sign = k0 % 2 == 0 ? 1.0 : -1.0;
  m.block(k0) -= (sign * st / static_cast<double>(space.dim(k0))) * Mat::Identity(space.dim(k0), space.dim(k0));
  return m;
}

std::vector<Mat> random_grams(const GradedVectorSpace& space, Rng& rng) {
  std::vector<Mat> g;
  for (int k = 0; k <= space.top_degree(); ++k) g.push_back(rng.positive_definite(space.dim(k)));
  return g;
}

}  // namespace sdet
