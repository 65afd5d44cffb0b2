#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sdet/graded.hpp"

namespace sdet {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi);
  int uniform_int(int lo, int hi);  // inclusive
  double normal();
  cplx complex_normal();
  Mat complex_matrix(int rows, int cols);
  // Well-conditioned invertible matrix: unitary times triangular with moderate diagonal.
  Mat invertible(int n);
  Mat unitary(int n);
  // Hermitian positive definite with eigenvalues in roughly [0.5, 3].
  Mat positive_definite(int n);

 private:
  std::mt19937_64 engine_;
};

struct RandomComplexOptions {
  int min_degrees = 2;
  int max_degrees = 5;
  int max_dim = 8;
};

// An acyclic differential d together with an acyclic codifferential delta on the
// same space with D = [delta, d] invertible.
struct ComplexPair {
  GradedMap d;
  GradedMap delta;
};

// Ranks r_0..r_{n-1} of the differential determine dims[k] = r_{k-1} + r_k.
GradedVectorSpace acyclic_space_from_ranks(const std::vector<int>& ranks);

ComplexPair random_acyclic_pair(std::uint64_t seed, const RandomComplexOptions& options = {});

// Acyclic differential alone on a random space.
GradedMap random_acyclic_differential(std::uint64_t seed, const RandomComplexOptions& options = {});

GradedMap random_degree_preserving(const GradedVectorSpace& space, Rng& rng, double scale);

// Same, then corrected in degree 0 so that the supertrace vanishes.
GradedMap random_supertraceless(const GradedVectorSpace& space, Rng& rng, double scale);

std::vector<Mat> random_grams(const GradedVectorSpace& space, Rng& rng);

}  // namespace sdet
