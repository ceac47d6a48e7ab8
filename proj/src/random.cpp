#include "fsbs/random.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <cstring>
#include <stdexcept>

#include "fsbs/error.hpp"

namespace fsbs {

std::vector<std::uint8_t> shake256(const std::vector<std::uint8_t>& input, std::size_t outlen) {
  std::vector<std::uint8_t> out(outlen);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_shake256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, input.data(), input.size()) != 1 ||
      EVP_DigestFinalXOF(ctx, out.data(), outlen) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error(Errc::InternalError, "SHAKE256 failed");
  }
  EVP_MD_CTX_free(ctx);
  return out;
}

RandomSource::RandomSource(const Seed& seed) : seed_(seed) {}

Seed RandomSource::os_seed() {
  Seed s;
  if (RAND_bytes(s.data(), int(s.size())) != 1)
    throw Error(Errc::InternalError, "OS entropy unavailable");
  return s;
}

RandomSource RandomSource::from_os_entropy() { return RandomSource(os_seed()); }

void RandomSource::refill() {
  std::vector<std::uint8_t> in;
  in.reserve(1 + seed_.size() + 8);
  in.push_back(kTagRng);
  in.insert(in.end(), seed_.begin(), seed_.end());
  for (int i = 0; i < 8; ++i) in.push_back(std::uint8_t(counter_ >> (8 * i)));
  ++counter_;
  block_ = shake256(in, 136);
  pos_ = 0;
}

void RandomSource::fill(void* out, std::size_t len) {
  auto* p = static_cast<std::uint8_t*>(out);
  while (len > 0) {
    if (pos_ >= block_.size()) refill();
    std::size_t take = std::min(len, block_.size() - pos_);
    std::memcpy(p, block_.data() + pos_, take);
    pos_ += take;
    p += take;
    len -= take;
  }
}

std::uint8_t RandomSource::byte() {
  std::uint8_t b;
  fill(&b, 1);
  return b;
}

std::uint64_t RandomSource::u64() {
  std::uint8_t b[8];
  fill(b, 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

std::uint64_t RandomSource::uniform_below(std::uint64_t bound) {
  if (bound == 0) throw Error(Errc::InternalError, "uniform_below(0)");
  if (bound == 1) return 0;
  std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % bound + 1) % bound;
  for (;;) {
    std::uint64_t v = u64();
    if (v <= limit) return v % bound;
  }
}

double RandomSource::uniform01() {
  return double(u64() >> 11) * 0x1p-53;
}

RandomSource RandomSource::fork(const std::string& label) {
  std::vector<std::uint8_t> in;
  in.push_back(kTagRng);
  in.insert(in.end(), seed_.begin(), seed_.end());
  in.push_back(0xff);  // fork separator, distinct from the LE64 counter path
  in.insert(in.end(), label.begin(), label.end());
  std::vector<std::uint8_t> h = shake256(in, 32);
  Seed s;
  std::memcpy(s.data(), h.data(), 32);
  return RandomSource(s);
}

Seed parse_seed_hex(const std::string& hex) {
  if (hex.size() != 64) throw Error(Errc::ParamError, "seed must be 64 hex chars");
  Seed s;
  auto nyb = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw Error(Errc::ParamError, "invalid hex in seed");
  };
  for (std::size_t i = 0; i < 32; ++i)
    s[i] = std::uint8_t(nyb(hex[2 * i]) << 4 | nyb(hex[2 * i + 1]));
  return s;
}

std::string seed_to_hex(const Seed& s) {
  static const char* d = "0123456789abcdef";
  std::string out;
  for (std::uint8_t b : s) {
    out.push_back(d[b >> 4]);
    out.push_back(d[b & 15]);
  }
  return out;
}

}  // namespace fsbs
