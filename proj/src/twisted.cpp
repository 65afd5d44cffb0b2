#include "sdet/twisted.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sdet/hodge.hpp"

namespace sdet {

void TwistedCWData::set_angles(const std::vector<double>& angles) {
  character.clear();
  for (double a : angles) character.push_back(std::polar(1.0, a));
}

cplx evaluate(const GroupRingElement& e, const std::vector<cplx>& character) {
  cplx sum = 0.0;
  for (const auto& term : e) {
    if (term.exponents.size() > character.size())
      throw std::invalid_argument("group ring term uses more generators than the character defines");
    cplx g = 1.0;
    for (std::size_t i = 0; i < term.exponents.size(); ++i) {
      const int p = term.exponents[i];
      // exact powers of a unit number: conj for negative exponents
      cplx base = p >= 0 ? character[i] : std::conj(character[i]) / std::norm(character[i]);
      for (int r = 0; r < std::abs(p); ++r) g *= base;
    }
    sum += static_cast<double>(term.coeff) * g;
  }
  return sum;
}

TwistedCWData circle_cw(double theta) {
  TwistedCWData c;
  c.cells = {1, 1};
  c.generators = 1;
  c.boundaries = {{{GroupRingElement{{1, {1}}, {-1, {0}}}}}};
  c.set_angles({theta});
  return c;
}

TwistedCWData lens_space_cw(int p, int q, int k) {
  if (p < 2) throw std::invalid_argument("lens space needs p >= 2");
  if (std::gcd(p, q) != 1) throw std::invalid_argument("lens space needs gcd(p, q) = 1");
  int r = 1;
  while ((static_cast<long>(r) * q - 1) % p != 0) ++r;
  TwistedCWData c;
  c.cells = {1, 1, 1, 1};
  c.generators = 1;
  GroupRingElement norm;
  for (int i = 0; i < p; ++i) norm.push_back({1, {i}});
  c.boundaries = {{{GroupRingElement{{1, {1}}, {-1, {0}}}}},
                  {{norm}},
                  {{GroupRingElement{{1, {r}}, {-1, {0}}}}}};
  c.set_angles({2.0 * M_PI * k / p});
  return c;
}

GradedMap build_twisted_cochain(const TwistedCWData& data) {
  if (data.cells.size() < 2) throw std::invalid_argument("CW data needs cells in at least two dimensions");
  if (data.boundaries.size() != data.cells.size() - 1)
    throw std::invalid_argument("CW data needs one boundary matrix per positive dimension");
  if (static_cast<int>(data.character.size()) != data.generators)
    throw std::invalid_argument("character must give one value per generator");
  for (const cplx& c : data.character)
    if (std::abs(std::abs(c) - 1.0) > 1e-12) throw std::invalid_argument("unitarity error: character value off the unit circle");
  const GradedVectorSpace space(data.cells);
  GradedMap d(space, 1);
  for (std::size_t k = 0; k + 1 < data.cells.size(); ++k) {
    const auto& b = data.boundaries[k];
    const int rows = data.cells[k + 1], cols = data.cells[k];
    if (static_cast<int>(b.size()) != rows)
      throw std::invalid_argument("boundary of dimension " + std::to_string(k + 1) + " has wrong number of cells");
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      if (static_cast<int>(b[static_cast<std::size_t>(i)].size()) != cols)
        throw std::invalid_argument("boundary row has wrong length in dimension " + std::to_string(k + 1));
      for (int j = 0; j < cols; ++j)
        m(i, j) = evaluate(b[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], data.character);
    }
    d.block(static_cast<int>(k)) = m;
  }
  const double scale = std::max(1.0, d.max_abs());
  if ((d * d).max_abs() > 1e-12 * scale * scale) throw std::invalid_argument("data error: boundary of boundary is not zero");
  return d;
}

TorsionResult combinatorial_torsion_detail(const GradedMap& d, const std::vector<Mat>& grams) {
  const AcyclicityResult ac = acyclicity_check(d);
  if (!ac.acyclic) throw std::invalid_argument("complex is not acyclic: torsion undefined");
  std::vector<Mat> g = grams;
  if (g.empty())
    for (int k = 0; k <= d.top_degree(); ++k) g.push_back(Mat::Identity(d.space().dim(k), d.space().dim(k)));
  const GradedMap delta = adjoint_codifferential(d, g);
  const GradedMap lap = graded_commutator(delta, d);
  TorsionResult r;
  r.sdet = sdet_restricted(lap, split_complement(delta));
  if (std::abs(r.sdet.imag()) > 1e-10 * std::abs(r.sdet) || !(r.sdet.real() > 0.0))
    throw std::runtime_error("Laplacian superdeterminant is not positive real");
  r.torsion = std::sqrt(r.sdet.real());
  for (const auto& dr : ac.degrees) r.ranks.push_back(dr.rank_out);
  return r;
}

double combinatorial_torsion(const GradedMap& d, const std::vector<Mat>& grams) {
  return combinatorial_torsion_detail(d, grams).torsion;
}

json twisted_cw_to_json(const TwistedCWData& data) {
  json b = json::array();
  for (const auto& mat : data.boundaries) {
    json rows = json::array();
    for (const auto& row : mat) {
      json jr = json::array();
      for (const auto& elem : row) {
        json terms = json::array();
        for (const auto& t : elem) terms.push_back({{"coeff", t.coeff}, {"exp", t.exponents}});
        jr.push_back(terms);
      }
      rows.push_back(jr);
    }
    b.push_back(rows);
  }
  json ch = json::array();
  for (const cplx& c : data.character) ch.push_back(complex_to_json(c));
  return {{"cells", data.cells}, {"generators", data.generators}, {"boundaries", b}, {"character", ch}};
}

TwistedCWData twisted_cw_from_json(const json& j) {
  TwistedCWData data;
  data.cells = j.at("cells").get<std::vector<int>>();
  data.generators = j.value("generators", 1);
  for (const auto& mat : j.at("boundaries")) {
    std::vector<std::vector<GroupRingElement>> m;
    for (const auto& row : mat) {
      std::vector<GroupRingElement> r;
      for (const auto& elem : row) {
        GroupRingElement e;
        for (const auto& t : elem) e.push_back({t.at("coeff").get<long>(), t.at("exp").get<std::vector<int>>()});
        r.push_back(std::move(e));
      }
      m.push_back(std::move(r));
    }
    data.boundaries.push_back(std::move(m));
  }
  if (j.contains("angles")) {
    data.set_angles(j.at("angles").get<std::vector<double>>());
  } else if (j.contains("character")) {
    for (const auto& c : j.at("character")) data.character.push_back(complex_from_json(c));
  }
  return data;
}

}  // namespace sdet
