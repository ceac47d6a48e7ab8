#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <map>
#include <sstream>

#include "doctest.h"
#include "fsbs/trapdoor.hpp"
#include "support/stats.hpp"

using namespace fsbs;

namespace {

RandomSource test_rng(std::uint8_t tag) {
  Seed s{};
  s[0] = tag;
  s[1] = 0x7d;
  return RandomSource(s);
}

IntMatrix uniform_mod(std::uint32_t r, std::uint32_t c, Int q, RandomSource& rng) {
  IntMatrix M(r, c);
  for (Int& v : M.a) v = Int(rng.uniform_below(std::uint64_t(q)));
  return M;
}

}  // namespace

TEST_CASE("trap_gen invariants at n=2, q=257") {
  RandomSource rng = test_rng(1);
  Modulus q(257);
  CHECK(trap_gen_min_m(2, 257) == 96);
  TrapdoorPair td = trap_gen(2, q, 96, rng);
  CHECK(td.A.rows == 2);
  CHECK(td.A.cols == 96);
  IntMatrix prod = mat_mul_mod(td.A, td.T, q);
  for (Int v : prod.a) CHECK(v == 0);
  CHECK(is_basis_of_lambda_perp(td.A, td.T, q));
  CHECK(abs_det_equals_power(td.T, 257, 2));  // |det| = 257^2 = 66049
  CHECK(td.gs_norm == doctest::Approx(gram_schmidt(td.T).max_norm));
  // quality budget: measured ||T~|| <= C_tg * sqrt(n log2 q), C_tg = 8
  CHECK(td.gs_norm <= 8.0 * std::sqrt(2.0 * std::log2(257.0)));
}

TEST_CASE("trap_gen at n=4, q=12289 and parameter guards") {
  RandomSource rng = test_rng(2);
  Modulus q(12289);
  CHECK(trap_gen_min_m(4, 12289) == 336);
  TrapdoorPair td = trap_gen(4, q, 336, rng);
  CHECK(is_basis_of_lambda_perp(td.A, td.T, q));
  CHECK(td.gs_norm <= 12.0 * std::sqrt(4.0 * std::log2(12289.0)));
  CHECK_THROWS_AS(trap_gen(4, q, 300, rng), Error);
}

TEST_CASE("trap_gen determinism and output uniformity sanity") {
  RandomSource a = test_rng(3), b = test_rng(3);
  Modulus q(257);
  CHECK(trap_gen(2, q, 96, a).A == trap_gen(2, q, 96, b).A);

  // byte-level chi-squared on A entries pooled over a few instances
  RandomSource rng = test_rng(4);
  std::vector<double> counts(257, 0.0);
  for (int i = 0; i < 30; ++i) {
    TrapdoorPair td = trap_gen(2, q, 96, rng);
    for (Int v : td.A.a) counts[std::size_t(v)] += 1;
  }
  double n = 30.0 * 2 * 96;
  std::vector<double> expected(257, n / 257.0);
  CHECK(teststat::chi2_gof_pvalue(counts, expected) > 0.001);
}

TEST_CASE("ext_basis whole-span identity") {
  RandomSource rng = test_rng(5);
  Modulus q(257);
  TrapdoorPair td = trap_gen(2, q, 96, rng);
  CHECK(ext_basis(td.A, 0, 96, td.T, q) == td.T);
}

TEST_CASE("ext_basis leading block preserves invariants and GS norm") {
  RandomSource rng = test_rng(6);
  Modulus q(257);
  TrapdoorPair td = trap_gen(2, q, 96, rng);
  IntMatrix B = uniform_mod(2, 96, 257, rng);
  IntMatrix full = concat_cols({td.A, B});
  IntMatrix T = ext_basis(full, 0, 96, td.T, q);
  CHECK(is_basis_of_lambda_perp(full, T, q));
  CHECK(gram_schmidt(T).max_norm == doctest::Approx(td.gs_norm).epsilon(1e-9));
}

TEST_CASE("ext_basis middle block preserves invariants and GS norm") {
  RandomSource rng = test_rng(7);
  Modulus q(257);
  TrapdoorPair td = trap_gen(2, q, 96, rng);
  IntMatrix B = uniform_mod(2, 32, 257, rng);
  IntMatrix C = uniform_mod(2, 48, 257, rng);
  IntMatrix full = concat_cols({B, td.A, C});
  IntMatrix T = ext_basis(full, 32, 96, td.T, q);
  CHECK(is_basis_of_lambda_perp(full, T, q));
  CHECK(gram_schmidt(T).max_norm == doctest::Approx(td.gs_norm).epsilon(1e-9));
}

TEST_CASE("ext_basis rejects an invalid inner trapdoor") {
  RandomSource rng = test_rng(8);
  Modulus q(257);
  TrapdoorPair td = trap_gen(2, q, 96, rng);
  IntMatrix B = uniform_mod(2, 16, 257, rng);
  IntMatrix full = concat_cols({td.A, B});
  IntMatrix badT = td.T;
  badT.at(0, 0) += 1;
  CHECK_THROWS_AS(ext_basis(full, 0, 96, badT, q), Error);
}

TEST_CASE("sample_isis relation and norm bound") {
  RandomSource rng = test_rng(9);
  Modulus q(257);
  TrapdoorPair td = trap_gen(2, q, 96, rng);
  GramSchmidt gs = gram_schmidt(td.T);
  GaussWidth s(td.gs_norm * 6);
  int exceed = 0;
  for (int i = 0; i < 200; ++i) {
    IntVector u{Int(rng.uniform_below(257)), Int(rng.uniform_below(257))};
    IntVector e = sample_isis(td.A, td.T, gs, s, u, q, rng);
    CHECK(mat_vec_mod(td.A, e, q) == u);
    if (double(norm(e)) > s.s * std::sqrt(96.0)) ++exceed;
  }
  CHECK(exceed <= 2);
}

TEST_CASE("sample_isis zero syndrome lands in the kernel lattice") {
  RandomSource rng = test_rng(10);
  Modulus q(257);
  TrapdoorPair td = trap_gen(2, q, 96, rng);
  GaussWidth s(td.gs_norm * 6);
  IntVector e = sample_isis(td.A, td.T, s, {0, 0}, q, rng);
  for (Int v : mat_vec_mod(td.A, IntVector(e), q)) CHECK(v == 0);
}

TEST_CASE("sample_isis coset distribution matches enumeration oracle") {
  // n=1, m=2, q=5, A=[1 2], u=(3), s=15
  RandomSource rng = test_rng(11);
  Modulus q(5);
  IntMatrix A(1, 2);
  A.a = {1, 2};
  IntMatrix T(2, 2);  // basis of the kernel lattice: (5,0), (-2,1)
  T.a = {5, -2, 0, 1};
  REQUIRE(is_basis_of_lambda_perp(A, T, q));
  GaussWidth s(15.0);
  const int N = 30000;
  std::map<std::pair<long long, long long>, double> counts;
  for (int i = 0; i < N; ++i) {
    IntVector e = sample_isis(A, T, s, {3}, q, rng);
    REQUIRE(mod_reduce(e[0] + 2 * e[1], 5) == 3);
    counts[{e[0], e[1]}] += 1;
  }
  std::map<std::pair<long long, long long>, double> pmf;
  double total = 0;
  for (long long e1 = -200; e1 <= 200; ++e1)
    for (long long e2 = -200; e2 <= 200; ++e2) {
      if (((e1 + 2 * e2) % 5 + 5) % 5 != 3) continue;
      double w = std::exp(-M_PI * double(e1 * e1 + e2 * e2) / 225.0);
      pmf[{e1, e2}] = w;
      total += w;
    }
  double tv = 0;
  for (auto& [pt, w] : pmf) {
    double emp = counts.count(pt) ? counts[pt] / N : 0.0;
    tv += std::abs(emp - w / total);
  }
  for (auto& [pt, cnt] : counts)
    if (!pmf.count(pt)) tv += cnt / N;
  CHECK(tv / 2 <= 0.05);
}

TEST_CASE("sample_key columnwise relation and domain bound") {
  RandomSource rng = test_rng(12);
  Modulus q(257);
  TrapdoorPair td = trap_gen(2, q, 96, rng);
  GaussWidth s(td.gs_norm * 6);
  IntMatrix K = uniform_mod(2, 8, 257, rng);
  IntMatrix S = sample_key(td.A, td.T, s, K, q, rng);
  CHECK(mat_mul_mod(td.A, S, q) == K);
  for (std::uint32_t j = 0; j < 8; ++j)
    CHECK(double(norm(S.column(j))) <= s.s * std::sqrt(96.0));

  IntMatrix Z(2, 3);  // K = 0: columns in the kernel lattice
  IntMatrix S0 = sample_key(td.A, td.T, s, Z, q, rng);
  for (Int v : mat_mul_mod(td.A, S0, q).a) CHECK(v == 0);
}

TEST_CASE("trapdoor serialization round trip and tamper detection") {
  RandomSource rng = test_rng(13);
  Modulus q(257);
  TrapdoorPair td = trap_gen(2, q, 96, rng);
  std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
  write_trapdoor(ss, td);
  TrapdoorPair rt = read_trapdoor(ss, q);
  CHECK(rt.A == td.A);
  CHECK(rt.T == td.T);
  CHECK(rt.gs_norm == doctest::Approx(td.gs_norm));

  std::string buf = ss.str();
  buf[200] = char(buf[200] + 1);  // corrupt inside A/T payload
  std::istringstream bad(buf, std::ios::binary);
  CHECK_THROWS_AS(read_trapdoor(bad, q), Error);
}
