#pragma once

#include <vector>

#include "sdet/graded.hpp"
#include "sdet/report.hpp"

namespace sdet {

// coeff * g_1^exp[0] * g_2^exp[1] * ... in the group ring of a free abelian group
struct GroupRingTerm {
  long coeff = 1;
  std::vector<int> exponents;
};
using GroupRingElement = std::vector<GroupRingTerm>;

struct TwistedCWData {
  std::vector<int> cells;  // cells per dimension
  int generators = 1;
  // boundaries[k-1][i][j]: coefficient of (k-1)-cell j in the boundary of k-cell i
  std::vector<std::vector<std::vector<GroupRingElement>>> boundaries;
  std::vector<cplx> character;  // image of each generator, |value| = 1

  void set_angles(const std::vector<double>& angles);
};

// Character value of a group ring element.
cplx evaluate(const GroupRingElement& e, const std::vector<cplx>& character);

// One 0-cell, one 1-cell, boundary g - 1, character g -> e^{i theta}.
TwistedCWData circle_cw(double theta);
// Lens space L(p, q): cells in dims 0..3 with boundaries g - 1, 1 + g + ... + g^(p-1), g^r - 1
// where r q = 1 mod p; character g -> e^{2 pi i k / p}.
TwistedCWData lens_space_cw(int p, int q, int k);

// Cochain differential: block k is the character image of boundaries[k].
GradedMap build_twisted_cochain(const TwistedCWData& data);

struct TorsionResult {
  double torsion = 0.0;
  cplx sdet;
  std::vector<int> ranks;
};

// sdet(Delta restricted to im delta)^(1/2) with delta the Gram-adjoint of d.
// Identity Grams when grams is empty.
TorsionResult combinatorial_torsion_detail(const GradedMap& d, const std::vector<Mat>& grams = {});
double combinatorial_torsion(const GradedMap& d, const std::vector<Mat>& grams = {});

json twisted_cw_to_json(const TwistedCWData& data);
TwistedCWData twisted_cw_from_json(const json& j);

}  // namespace sdet
