#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "sdet/ruelle.hpp"

using namespace sdet;

namespace {

const std::array<long, 4> kCat = {2, 1, 1, 1};
const std::vector<std::vector<int>> kGolden = {{1, 1}, {1, 0}};

// all admissible cyclic words of length n
std::vector<std::vector<int>> periodic_words(const std::vector<std::vector<int>>& m, int n) {
  const int s = static_cast<int>(m.size());
  std::vector<std::vector<int>> out;
  std::vector<int> w(static_cast<std::size_t>(n), 0);
  long total = 1;
  for (int i = 0; i < n; ++i) total *= s;
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (int i = 0; i < n; ++i, c /= s) w[static_cast<std::size_t>(i)] = static_cast<int>(c % s);
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) ok = m[w[i]][w[(i + 1) % n]] == 1;
    if (ok) out.push_back(w);
  }
  return out;
}

bool primitive_word(const std::vector<int>& w) {
  const int n = static_cast<int>(w.size());
  for (int shift = 1; shift < n; ++shift)
    if (n % shift == 0) {
      bool same = true;
      for (int i = 0; i < n && same; ++i) same = w[i] == w[(i + shift) % n];
      if (same) return false;
    }
  return true;
}

std::vector<int> canonical_rotation(const std::vector<int>& w) {
  std::vector<int> best = w, r = w;
  for (std::size_t i = 1; i < w.size(); ++i) {
    std::rotate(r.begin(), r.begin() + 1, r.end());
    best = std::min(best, r);
  }
  return best;
}

double mu_golden_cat() { return (3.0 + std::sqrt(5.0)) / 2.0; }

}  // namespace

TEST_CASE("cat map orbit counts") {
  const OrbitCatalog c = cat_map_catalog(kCat, 30, 0.0);
  const long fixed[] = {1, 5, 16, 45};
  const long prim[] = {1, 2, 5, 10};
  for (int n = 1; n <= 4; ++n) {
    CHECK(c.fixed_point_counts[n] == fixed[n - 1]);
    CHECK(c.primitive_counts[n] == prim[n - 1]);
  }
  // trace recursion oracle in plain long arithmetic
  long prev = 2, cur = 3;
  for (int n = 1; n <= 30; ++n) {
    CHECK(c.fixed_point_counts[n] == cur - 2);
    const long next = 3 * cur - prev;
    prev = cur;
    cur = next;
  }
  for (int n = 1; n <= 30; ++n) {
    CHECK(c.fixed_point_counts[n] >= 1);
    CHECK(c.primitive_counts[n] >= 0);
    int128 rebuilt = 0;
    for (int d = 1; d <= n; ++d)
      if (n % d == 0) rebuilt += d * c.primitive_counts[d];
    CHECK(rebuilt == c.fixed_point_counts[n]);
  }
  CHECK_THROWS_AS(cat_map_catalog({1, 1, 0, 1}, 5, 0.0), std::domain_error);
  CHECK_THROWS_AS(cat_map_catalog({2, 1, 1, 2}, 5, 0.0), std::domain_error);
}

TEST_CASE("mobius function") {
  const int expected[] = {1, -1, -1, 0, -1, 1, -1, 0, 0, 1, -1, 0};
  for (int n = 1; n <= 12; ++n) CHECK(mobius(n) == expected[n - 1]);
}

TEST_CASE("collapse identity is exact") {
  for (const auto& a : {kCat, std::array<long, 4>{3, 1, 2, 1}, std::array<long, 4>{5, 2, 2, 1},
                        std::array<long, 4>{1, 1, 1, 2}})
    for (int n = 1; n <= 30; ++n) {
      const auto [num, den] = collapse_fraction(a, n);
      CHECK(num == -den);
    }
}

TEST_CASE("Guillemin weights") {
  const OrbitCatalog c = cat_map_catalog(kCat, 12, 0.0);
  const auto w0 = guillemin_comb(c, 0), w1 = guillemin_comb(c, 1), w2 = guillemin_comb(c, 2);
  REQUIRE(c.orbits.front().period == 1.0);
  CHECK(std::abs(w0.front().weight - 1.0) <= 1e-14);
  for (std::size_t i = 0; i < c.orbits.size(); ++i) {
    const ClosedOrbit& o = c.orbits[i];
    CHECK(std::abs(w2[i].weight - w0[i].weight) <= 1e-12 * std::abs(w0[i].weight));
    // per-orbit collapse to (-1)^m, m = 1
    const cplx alt = (w0[i].weight - w1[i].weight + w2[i].weight) / (o.primitive_period * o.count);
    CHECK(std::abs(alt + 1.0) <= 1e-12);
  }
  CHECK_THROWS_AS(guillemin_comb(c, 3), std::invalid_argument);
  CHECK_THROWS_AS(guillemin_comb(subshift_catalog(kGolden, {1.0, 1.0}, 5, 0.0), 0), UnsupportedOperation);
}

TEST_CASE("golden-mean subshift counts") {
  const OrbitCatalog c = subshift_catalog(kGolden, {1.0, 1.0}, 12, 0.0);
  const long lucas[] = {1, 3, 4, 7, 11};
  for (int n = 1; n <= 5; ++n) CHECK(c.fixed_point_counts[n] == lucas[n - 1]);
  CHECK(c.warnings.empty());
}

TEST_CASE("subshift catalog against word enumeration") {
  const std::vector<std::vector<std::vector<int>>> shifts = {
      kGolden, {{1, 1, 0}, {0, 1, 1}, {1, 0, 1}}, {{1, 1}, {1, 1}}, {{0, 1, 1}, {1, 0, 1}, {1, 1, 1}}};
  for (const auto& m : shifts) {
    const std::vector<double> roof(m.size(), 1.0);
    const OrbitCatalog c = subshift_catalog(m, roof, 12, 0.0);
    for (int n = 1; n <= 12; ++n) {
      const auto words = periodic_words(m, n);
      CHECK(c.fixed_point_counts[n] == static_cast<int128>(words.size()));
      std::set<std::vector<int>> necklaces;
      for (const auto& w : words)
        if (primitive_word(w)) necklaces.insert(canonical_rotation(w));
      CHECK(c.primitive_counts[n] == static_cast<int128>(necklaces.size()));
    }
  }
}

TEST_CASE("subshift periods are Birkhoff sums") {
  const OrbitCatalog c = subshift_catalog(kGolden, {1.0, 2.0}, 6, 0.0);
  bool fixed_seen = false, two_cycle_seen = false;
  for (const auto& o : c.orbits) {
    if (o.iterate != 1) continue;
    if (o.word_length == 1) {
      CHECK(o.period == 1.0);
      fixed_seen = true;
    }
    if (o.word_length == 2) {
      CHECK(o.period == 3.0);
      CHECK(o.count == 1.0);
      two_cycle_seen = true;
    }
  }
  CHECK(fixed_seen);
  CHECK(two_cycle_seen);
  // period multiset against enumeration at length 6
  std::multiset<double> from_catalog, from_words;
  for (const auto& o : c.orbits)
    if (o.word_length == 6)
      for (int i = 0; i < static_cast<int>(o.count) * 6 / o.iterate; ++i) from_catalog.insert(o.period);
  for (const auto& w : periodic_words(kGolden, 6)) {
    double t = 0.0;
    for (int s : w) t += s == 0 ? 1.0 : 2.0;
    from_words.insert(t);
  }
  CHECK(from_catalog == from_words);
}

TEST_CASE("non-primitive subshift warns") {
  const OrbitCatalog c = subshift_catalog({{0, 1}, {1, 0}}, {1.0, 1.0}, 6, 0.0);
  CHECK_FALSE(c.warnings.empty());
  CHECK_THROWS_AS(subshift_catalog({{1, 2}, {1, 0}}, {1.0, 1.0}, 4, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(subshift_catalog(kGolden, {1.0, 0.0}, 4, 0.0), std::invalid_argument);
}

TEST_CASE("single orbit truncation") {
  const OrbitCatalog c = cat_map_catalog(kCat, 1, 0.0);
  for (double lam : {1.5, 2.0, 3.0}) {
    const ZetaTruncation z = ruelle_zeta_truncated(c, lam);
    CHECK(std::abs(z.value - (1.0 - std::exp(-lam))) <= 1e-15);
  }
}

TEST_CASE("cat map closed form") {
  CHECK(std::abs(zeta_closed_form_cat(kCat, M_PI, 0.0) - 1.25) <= 1e-14);
  CHECK(std::abs(zeta_closed_form_cat(kCat, 2.0 * M_PI / 3.0, 0.0) - 4.0 / 3.0) <= 1e-14);
  CHECK_THROWS_AS(zeta_closed_form_cat(kCat, 0.0, 0.0), SingularityError);
  CHECK(std::abs(zeta_closed_form_cat(kCat, M_PI / 2.0, 0.0)) > 0.1);
}

TEST_CASE("product, sum and closed form agree") {
  const double mu = mu_golden_cat();
  const OrbitCatalog c = cat_map_catalog(kCat, 60, M_PI);
  for (double lam : {std::log(mu) + 0.5, 1.5, 2.0, 3.0}) {
    const ZetaTruncation z = ruelle_zeta_truncated(c, lam);
    const OrbitSum sum = ruelle_log_zeta_sum(c, lam);
    CHECK(std::abs(z.log_value - sum.value) <= 1e-10);
    const cplx closed = zeta_closed_form_cat(kCat, M_PI, lam);
    CHECK(std::abs(z.value - closed) <= 1e-8);
    // sdet = zeta^(-1) for m = 1
    const OrbitSum ls = orbit_log_sdet(c, lam);
    CHECK(std::abs(std::exp(ls.value) * z.value - 1.0) <= 1e-8);
    CHECK(std::abs(ls.value + z.log_value) <= 1e-10);
  }
  // log sdet = -log of the closed form at z = -e^{-1.5}
  const cplx zz = -std::exp(-1.5);
  const cplx expected = -std::log((1.0 - mu * zz) * (1.0 - zz / mu) / ((1.0 - zz) * (1.0 - zz)));
  CHECK(std::abs(orbit_log_sdet(c, 1.5).value - expected) <= 1e-8);
}

TEST_CASE("orbit sums: limits and tail bound") {
  const OrbitCatalog c80 = cat_map_catalog(kCat, 80, M_PI);
  const OrbitCatalog c40 = c80.truncated(40);
  CHECK(std::abs(orbit_log_sdet(c80, 60.0).value) <= 1e-25);
  for (double lam : {1.4, 2.0, 2.5}) {
    const OrbitSum a = orbit_log_sdet(c40, lam), b = orbit_log_sdet(c80, lam);
    CHECK(std::abs(a.value - b.value) <= a.tail_bound);
    CHECK(a.tail_bound <= std::exp(-(lam - std::log(mu_golden_cat())) * 40));
  }
  // a freshly built 40 catalog is the same as the truncation
  const OrbitCatalog fresh = cat_map_catalog(kCat, 40, M_PI);
  CHECK(std::abs(orbit_log_sdet(fresh, 2.0).value - orbit_log_sdet(c40, 2.0).value) <= 1e-15);
}

TEST_CASE("abscissa enforcement") {
  const OrbitCatalog c = cat_map_catalog(kCat, 20, M_PI);
  const double required = std::log(mu_golden_cat()) + 0.3;
  try {
    orbit_log_sdet(c, 1.0);
    FAIL("expected abscissa error");
  } catch (const AbscissaError& e) {
    CHECK(e.required() == doctest::Approx(required));
  }
  CHECK_THROWS_AS(ruelle_zeta_truncated(c, required), AbscissaError);
  CHECK_THROWS_AS(F_k_dirichlet(c, 0, 0.5, 1.0), AbscissaError);
  CHECK_NOTHROW(ruelle_zeta_truncated(c, required + 1e-9));
}

TEST_CASE("transfer determinant") {
  for (const std::vector<double>& roof : {std::vector<double>{1.0, 1.0}, {1.0, 2.0}, {0.3, 5.0}}) {
    CHECK(std::abs(zeta_transfer_determinant(kGolden, roof, M_PI, 0.0) - 1.0) <= 1e-15);
    CHECK(std::abs(zeta_transfer_determinant(kGolden, roof, M_PI / 2.0, 0.0) - cplx(2.0, -1.0)) <= 1e-15);
  }
  const cplx first = zeta_transfer_determinant(kGolden, {1.0, 1.0}, 0.7, 0.0);
  for (int i = 0; i <= 10; ++i) {
    const double tau = 0.05 * i;
    CHECK(std::abs(zeta_transfer_determinant(kGolden, {1.0, 1.0 + tau}, 0.7, 0.0) - first) <= 1e-15);
  }
  // row convention: same spectrum, same determinant
  const std::vector<std::vector<int>> m3 = {{1, 1, 0}, {0, 1, 1}, {1, 1, 1}};
  for (cplx lam : {cplx(0.4), cplx(1.0, 0.3), cplx(2.5)}) {
    const cplx col = zeta_transfer_determinant(m3, {0.5, 1.0, 1.7}, 1.1, lam);
    const cplx row = zeta_transfer_determinant(m3, {0.5, 1.0, 1.7}, 1.1, lam, true);
    CHECK(std::abs(col - row) <= 1e-14);
  }
}

TEST_CASE("subshift truncation against the transfer determinant") {
  const OrbitCatalog c = subshift_catalog(kGolden, {1.0, 1.0}, 40, 0.0);
  const cplx det = zeta_transfer_determinant(kGolden, {1.0, 1.0}, 0.0, 2.0);
  // direct 2x2 determinant: det(I - e^{-2} M)
  const double q = std::exp(-2.0);
  CHECK(std::abs(det - ((1.0 - q) * 1.0 - q * q)) <= 1e-15);
  CHECK(std::abs(ruelle_zeta_truncated(c, 2.0).value - det) <= 1e-8);
  const std::vector<std::vector<int>> m3 = {{1, 1, 0}, {0, 1, 1}, {1, 1, 1}};
  const std::vector<double> roof = {0.8, 1.3, 2.0};
  const OrbitCatalog c3 = subshift_catalog(m3, roof, 40, 2.0);
  for (double lam : {2.5, 3.0}) {
    CHECK(std::abs(ruelle_zeta_truncated(c3, lam).value - zeta_transfer_determinant(m3, roof, 2.0, lam)) <= 1e-8);
    const OrbitSum ls = orbit_log_sdet(c3, lam);
    CHECK(std::abs(ls.value + ruelle_zeta_truncated(c3, lam).log_value) <= 1e-10);
  }
}

TEST_CASE("Dirichlet series F_k") {
  const OrbitCatalog c = cat_map_catalog(kCat, 60, M_PI);
  const cplx lam = 1.5;
  for (int k = 0; k <= 2; ++k) {
    cplx plain = 0.0;
    for (const auto& atom : guillemin_comb(c, k)) plain += atom.weight * std::exp(-lam * atom.time);
    CHECK(std::abs(F_k_dirichlet(c, k, lam, 1.0).v - plain) <= 1e-12 * std::abs(plain));
  }
  for (cplx s : {cplx(0.5), cplx(2.0, 1.0)})
    CHECK(std::abs(F_k_dirichlet(c, 0, lam, s).v - F_k_dirichlet(c, 2, lam, s).v) <= 1e-12);
  cplx alternating = 0.0;
  for (int k = 0; k <= 2; ++k) alternating += (k % 2 ? -1.0 : 1.0) * F_k_dirichlet(c, k, lam, 0.0).d;
  CHECK(std::abs(alternating + orbit_log_sdet(c, lam).value) <= 1e-9);
  // derivative against a central difference at s = 0.7
  const double h = 1e-5;
  const cplx fd = (F_k_dirichlet(c, 1, lam, 0.7 + h).v - F_k_dirichlet(c, 1, lam, 0.7 - h).v) / (2.0 * h);
  CHECK(std::abs(F_k_dirichlet(c, 1, lam, 0.7).d - fd) <= 1e-7 * std::abs(fd));
}

TEST_CASE("regularity at zero") {
  for (double alpha : {M_PI, 2.0 * M_PI / 3.0, M_PI / 2.0}) {
    const ExperimentReport rep = ruelle_lambda_report(cat_map_catalog(kCat, 20, alpha), {0.0});
    CHECK(rep.summary["regular_at_zero"].get<bool>());
  }
  const ExperimentReport rep = ruelle_lambda_report(cat_map_catalog(kCat, 20, 0.0), {0.0});
  CHECK_FALSE(rep.summary["regular_at_zero"].get<bool>());
  CHECK(rep.rows.front().computed["singular"].get<bool>());
}

TEST_CASE("lambda report") {
  const OrbitCatalog c = cat_map_catalog(kCat, 60, M_PI);
  std::vector<double> grid;
  for (int i = 0; i <= 18; ++i) grid.push_back(1.2 + 0.1 * i);
  const ExperimentReport rep = ruelle_lambda_report(c, grid);
  CHECK(rep.all_pass());
  CHECK(rep.rows.size() == grid.size());
  for (const auto& row : rep.rows) {
    for (const char* key : {"lambda", "zeta", "log_sdet", "tail_bound"}) CHECK(row.computed.contains(key));
  }
  CHECK(rep.rows.front().computed["region"] == "continuation");
  CHECK(rep.rows.back().computed["region"] == "orbit_sum");
  const json j = rep.to_json(false);
  CHECK(ExperimentReport::from_json(j).to_json(false) == j);
}

TEST_CASE("roof constancy report") {
  std::vector<std::vector<double>> roofs;
  std::uint64_t state = 12345;
  for (int i = 0; i < 10; ++i) {
    std::vector<double> r;
    for (int s = 0; s < 2; ++s) {
      state = state * 6364136223846793005ULL + 1442695040888963407ULL;
      r.push_back(0.2 + 3.0 * static_cast<double>(state >> 11) / 9007199254740992.0);
    }
    roofs.push_back(r);
  }
  const ExperimentReport pi = roof_constancy_report(kGolden, roofs, M_PI);
  CHECK(pi.all_pass());
  CHECK(std::abs(complex_from_json(pi.summary["zeta_at_zero"]) - 1.0) <= 1e-15);
  const ExperimentReport half = roof_constancy_report(kGolden, roofs, M_PI / 2.0);
  CHECK(std::abs(complex_from_json(half.summary["zeta_at_zero"]) - cplx(2.0, -1.0)) <= 1e-15);
}

TEST_CASE("catalog summary JSON") {
  const json j = catalog_summary_json(cat_map_catalog(kCat, 70, 1.0));
  CHECK(j["fixed_point_counts"][0] == 1);
  CHECK(j["fixed_point_counts"][69].is_string());
  CHECK(int128_to_string(-static_cast<int128>(1234567890123LL) * 1000000000000LL) == "-1234567890123000000000000");
}
