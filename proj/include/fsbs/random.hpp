#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace fsbs {

using Seed = std::array<std::uint8_t, 32>;

/// One-shot SHAKE256 XOF.
std::vector<std::uint8_t> shake256(const std::vector<std::uint8_t>& input, std::size_t outlen);

// Domain tags for every XOF use in the scheme.
constexpr std::uint8_t kTagChallenge = 0x01;
constexpr std::uint8_t kTagCommit = 0x02;
constexpr std::uint8_t kTagRng = 0x03;
constexpr std::uint8_t kTagBall = 0x04;

/// Deterministic byte stream: block i is SHAKE256(0x03 || seed || LE64(i)),
/// 136 bytes per block. Identical seed => identical stream. Single-owner.
class RandomSource {
 public:
  explicit RandomSource(const Seed& seed);
  static RandomSource from_os_entropy();
  static Seed os_seed();

  void fill(void* out, std::size_t len);
  std::uint8_t byte();
  std::uint64_t u64();
  /// Unbiased uniform integer in [0, bound), bound >= 1.
  std::uint64_t uniform_below(std::uint64_t bound);
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  /// Derive an independent stream (distinct personalization byte string).
  RandomSource fork(const std::string& label);

  const Seed& seed() const { return seed_; }

 private:
  Seed seed_;
  std::vector<std::uint8_t> block_;
  std::size_t pos_ = 0;
  std::uint64_t counter_ = 0;
  void refill();
};

Seed parse_seed_hex(const std::string& hex);
std::string seed_to_hex(const Seed& s);

}  // namespace fsbs
