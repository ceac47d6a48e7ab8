#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "fsbs/random.hpp"

using namespace fsbs;

TEST_CASE("shake256 known answer") {
  // SHAKE256(empty), first 16 output bytes (FIPS 202 reference value)
  auto out = shake256({}, 16);
  const std::uint8_t expect[16] = {0x46, 0xb9, 0xdd, 0x2b, 0x0b, 0xa8, 0x8d, 0x13,
                                   0x23, 0x3b, 0x3f, 0xeb, 0x74, 0x3e, 0xeb, 0x24};
  REQUIRE(out.size() == 16);
  for (int i = 0; i < 16; ++i) CHECK(out[i] == expect[i]);
}

TEST_CASE("shake256 prefix consistency") {
  std::vector<std::uint8_t> msg{1, 2, 3};
  auto a = shake256(msg, 64);
  auto b = shake256(msg, 32);
  CHECK(std::equal(b.begin(), b.end(), a.begin()));
}

TEST_CASE("random source determinism and forking") {
  Seed s{};
  s[3] = 0x77;
  RandomSource r1(s), r2(s);
  for (int i = 0; i < 1000; ++i) CHECK(r1.u64() == r2.u64());

  RandomSource r3(s);
  RandomSource f1 = r3.fork("a"), f2 = r3.fork("b");
  CHECK(f1.u64() != f2.u64());
  // forked stream differs from the parent stream
  RandomSource r4(s);
  CHECK(r4.fork("a").u64() == RandomSource(s).fork("a").u64());
}

TEST_CASE("uniform_below bounds and coverage") {
  RandomSource rng(Seed{});
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 20000; ++i) {
    std::uint64_t v = rng.uniform_below(10);
    REQUIRE(v < 10);
    ++counts[v];
  }
  for (int c : counts) {
    CHECK(c > 1700);  // expectation 2000; crude uniformity guard
    CHECK(c < 2300);
  }
  CHECK(rng.uniform_below(1) == 0);
}

TEST_CASE("uniform01 range") {
  RandomSource rng(Seed{});
  double mn = 1, mx = 0, sum = 0;
  for (int i = 0; i < 20000; ++i) {
    double v = rng.uniform01();
    mn = std::min(mn, v);
    mx = std::max(mx, v);
    sum += v;
  }
  CHECK(mn >= 0.0);
  CHECK(mx < 1.0);
  CHECK(sum / 20000 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("seed hex round trip") {
  Seed s{};
  for (int i = 0; i < 32; ++i) s[std::size_t(i)] = std::uint8_t(7 * i + 1);
  CHECK(parse_seed_hex(seed_to_hex(s)) == s);
  CHECK_THROWS(parse_seed_hex("zz"));
  CHECK_THROWS(parse_seed_hex("ab"));  // wrong length
}
