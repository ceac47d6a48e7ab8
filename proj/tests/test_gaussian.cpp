#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <map>

#include "doctest.h"
#include "fsbs/gaussian.hpp"
#include "support/stats.hpp"

using namespace fsbs;

namespace {

RandomSource test_rng(std::uint8_t tag) {
  Seed s{};
  s[0] = tag;
  s[1] = 0x61;
  return RandomSource(s);
}

}  // namespace

TEST_CASE("sample_z pmf at s=4 against exact oracle") {
  RandomSource rng = test_rng(1);
  GaussWidth s(4.0);
  const int N = 100000;
  std::map<long long, double> counts;
  for (int i = 0; i < N; ++i) {
    Int v = sample_z(s, 0.0, rng);
    CHECK(std::abs(double(v)) <= 48.0);  // 12s tail cut
    counts[v] += 1;
  }
  auto pmf = teststat::gaussian_pmf(4.0, 0.0, -48, 48);
  std::vector<double> obs, exp;
  for (const auto& [x, p] : pmf) {
    obs.push_back(counts.count(x) ? counts[x] : 0.0);
    exp.push_back(p * N);
  }
  CHECK(teststat::chi2_gof_pvalue(obs, exp) > 0.001);
  // P(0)/P(1) = exp(pi/16) ~ 1.2169
  CHECK(counts[0] / counts[1] == doctest::Approx(std::exp(M_PI / 16)).epsilon(0.05));
}

TEST_CASE("sample_z symmetry at s=2") {
  RandomSource rng = test_rng(2);
  GaussWidth s(2.0);
  double sum = 0;
  const int N = 200000;
  for (int i = 0; i < N; ++i) sum += double(sample_z(s, 0.0, rng));
  double se = (2.0 / std::sqrt(2 * M_PI)) / std::sqrt(double(N));
  CHECK(std::abs(sum / N) < 5 * se);
}

TEST_CASE("sample_z wide parameter matches Gaussian limit") {
  RandomSource rng = test_rng(3);
  GaussWidth s(1e6);
  const int N = 100000;
  double mean = 0, m2 = 0;
  for (int i = 0; i < N; ++i) {
    double v = double(sample_z(s, 0.5, rng)) - 0.5;
    mean += v;
    m2 += v * v;
  }
  mean /= N;
  double var = m2 / N - mean * mean;
  CHECK(var == doctest::Approx(1e12 / (2 * M_PI)).epsilon(0.02));
}

TEST_CASE("sample_z honors shifted centers") {
  RandomSource rng = test_rng(4);
  GaussWidth s(3.0);
  double sum = 0;
  const int N = 50000;
  for (int i = 0; i < N; ++i) sum += double(sample_z(s, 10.25, rng));
  CHECK(sum / N == doctest::Approx(10.25).epsilon(0.01));
}

TEST_CASE("accept_ratio closed forms") {
  IntVector z{5, -3, 2}, zero{0, 0, 0};
  double M = std::exp(1.0 + 1.0 / 288.0);
  CHECK(accept_ratio(z, zero, GaussWidth(7), M) == doctest::Approx(1.0 / M).epsilon(1e-12));

  IntVector v{3, 4, 0};  // ||v|| = 5
  double r = accept_ratio(v, v, GaussWidth(60.0), M);
  CHECK(r == doctest::Approx(std::exp(-M_PI / 144.0) / M).epsilon(1e-9));
  CHECK(r == doctest::Approx(0.3588).epsilon(1e-3));
}

TEST_CASE("rejection_step calibration") {
  RandomSource rng = test_rng(5);
  IntVector z{1, 2}, zero{0, 0};
  for (int i = 0; i < 100; ++i)
    CHECK(rejection_step(z, zero, GaussWidth(5), 1.0, rng) == RejectionOutcome::Accept);

  // empirical accept rate tracks accept_ratio at fixed inputs
  IntVector v{3, 4, 0};
  double target = accept_ratio(v, v, GaussWidth(60.0), std::exp(1.0 + 1.0 / 288.0));
  int acc = 0;
  const int N = 100000;
  for (int i = 0; i < N; ++i)
    acc += rejection_step(v, v, GaussWidth(60.0), std::exp(1.0 + 1.0 / 288.0), rng) ==
           RejectionOutcome::Accept;
  CHECK(double(acc) / N == doctest::Approx(target).epsilon(0.03));
}

TEST_CASE("rejection over shifted draws accepts at rate 1/M") {
  RandomSource rng = test_rng(6);
  const double M = std::exp(1.0 + 1.0 / 288.0);
  IntVector v{12, -9, 20, 7};  // ||v|| = 26.15..
  double s = 12.0 * std::sqrt(double(norm_sq(v)));
  int acc = 0;
  const int N = 50000;
  for (int i = 0; i < N; ++i) {
    IntVector z(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) z[j] = v[j] + sample_z(GaussWidth(s), 0.0, rng);
    acc += rejection_step(z, v, GaussWidth(s), M, rng) == RejectionOutcome::Accept;
  }
  CHECK(double(acc) / N == doctest::Approx(1.0 / M).epsilon(0.05));
}

TEST_CASE("sample_d on the scaled integer lattice") {
  RandomSource rng = test_rng(7);
  const Int q = 11;
  IntMatrix T(3, 3);
  for (int i = 0; i < 3; ++i) T.at(i, i) = q;
  GaussWidth s(5.0 * q);
  std::map<long long, double> counts;
  const int N = 30000;
  for (int i = 0; i < N; ++i) {
    IntVector v = sample_d(T, s, {0, 0, 0}, rng);
    for (Int x : v) {
      CHECK(x % q == 0);
      counts[x / q] += 1;
    }
  }
  auto pmf = teststat::gaussian_pmf(5.0, 0.0, -60, 60);  // D_{qZ,5q} scaled down
  std::vector<double> obs, exp;
  for (const auto& [x, p] : pmf) {
    obs.push_back(counts.count(x) ? counts[x] : 0.0);
    exp.push_back(p * 3 * N);
  }
  CHECK(teststat::chi2_gof_pvalue(obs, exp) > 0.001);
}

TEST_CASE("sample_d output lies in the lattice and matches brute force") {
  RandomSource rng = test_rng(8);
  IntMatrix T(2, 2);
  T.a = {2, 1, 0, 2};  // columns (2,0) and (1,2)
  GaussWidth s(6.0);
  const int N = 30000;
  std::map<std::pair<long long, long long>, double> counts;
  for (int i = 0; i < N; ++i) {
    IntVector v = sample_d(T, s, {0.0, 0.0}, rng);
    // membership: v = x1*(2,0) + x2*(1,2) with integer x2 = v2/2, x1 = (v1 - x2)/2
    REQUIRE(v[1] % 2 == 0);
    REQUIRE((v[0] - v[1] / 2) % 2 == 0);
    counts[{v[0], v[1]}] += 1;
  }
  // brute-force D_{L,6} over all lattice points in the tail box
  double total = 0;
  std::map<std::pair<long long, long long>, double> pmf;
  for (long long x1 = -40; x1 <= 40; ++x1)
    for (long long x2 = -40; x2 <= 40; ++x2) {
      long long v0 = 2 * x1 + x2, v1 = 2 * x2;
      double w = std::exp(-M_PI * double(v0 * v0 + v1 * v1) / 36.0);
      pmf[{v0, v1}] = w;
      total += w;
    }
  double tv = 0;
  for (auto& [pt, w] : pmf) {
    double emp = counts.count(pt) ? counts[pt] / N : 0.0;
    tv += std::abs(emp - w / total);
  }
  for (auto& [pt, cnt] : counts)
    if (!pmf.count(pt)) tv += cnt / N;
  CHECK(tv / 2 <= 0.03);
}

TEST_CASE("sample_d rejects too-small widths") {
  IntMatrix T(2, 2);
  T.a = {20, 0, 0, 20};
  RandomSource rng = test_rng(9);
  CHECK_THROWS_AS(sample_d(T, GaussWidth(2.0), {0.0, 0.0}, rng), Error);
}

TEST_CASE("samplers are reproducible under a fixed seed") {
  RandomSource a = test_rng(10), b = test_rng(10);
  CHECK(sample_zm(GaussWidth(100.0), 64, a) == sample_zm(GaussWidth(100.0), 64, b));
}

TEST_CASE("sample_zm norm tail") {
  RandomSource rng = test_rng(11);
  GaussWidth s(100.0);
  int exceed = 0;
  const int N = 2000;
  for (int i = 0; i < N; ++i) {
    IntVector v = sample_zm(s, 480, rng);
    if (double(norm(v)) > 100.0 * std::sqrt(480.0)) ++exceed;
  }
  CHECK(exceed <= N / 100);
}

TEST_CASE("width below one is rejected") { CHECK_THROWS_AS(GaussWidth(0.5), Error); }
