#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "fsbs/params.hpp"
#include "fsbs/timetree.hpp"
#include "fsbs/trapdoor.hpp"

namespace fsbs {

using Bytes = std::vector<std::uint8_t>;

/// Output length of the message commitment and its opening randomness.
/// Fixed independently of n: commitment collisions must stay negligible even
/// at toy lattice dimensions.
constexpr std::uint32_t kCommitBits = 256;

/// Packed bit string, LSB-first within each byte; unused high bits zero.
struct BitString {
  Bytes bytes;
  std::uint32_t nbits = 0;

  bool operator==(const BitString&) const = default;
};

struct PublicKey {
  Params params;
  IntMatrix A0;               // n x m
  std::vector<IntMatrix> Ab;  // 2*ell blocks: A_i^{(b)} at index 2*(i-1)+b
  IntMatrix K;                // n x k

  const IntMatrix& side(std::uint32_t level, std::uint8_t b) const {
    return Ab.at(2 * std::size_t(level - 1) + b);
  }
};

struct Signature {
  BitString dprime;  // kCommitBits bits, commitment opening
  IntVector eprime;  // length k, ternary, weight <= kappa
  IntVector zprime;  // length (1+ell)m
};

struct View {
  std::uint32_t t = 0;
  IntVector r;
  IntVector e;
  IntVector z;
};

struct SetupResult {
  Params params;
  PublicKey pk;
  SecretKey sk;
};

/// Runs trapdoor generation, measures the basis quality, finalizes the
/// Gaussian chain from it, and draws the remaining public matrices.
SetupResult setup(std::uint32_t n, std::uint32_t ell, Int q, std::uint32_t k, std::uint32_t kappa,
                  RandomSource& rng);

/// Deterministic ternary vector of length k with exactly kappa nonzeros.
IntVector hash_to_ball(const Bytes& seed, std::uint32_t k, std::uint32_t kappa);
IntVector challenge_hash(const IntVector& u, const BitString& c, const Params& p);
bool in_challenge_ball(const IntVector& e, const Params& p);
BitString commit(const Bytes& mu, const BitString& dprime, std::uint32_t n);

// ---- Signer side ----

/// Per-period precomputation: leaf matrix F_t, its delegated basis, and the
/// basis orthogonalization. Immutable once built; shareable across sessions.
struct SignerContext {
  const PublicKey* pk = nullptr;
  std::uint32_t t = 0;
  IntMatrix F;  // n x (1+ell)m
  IntMatrix T;  // basis of the kernel lattice of F
  GramSchmidt gs;
};

SignerContext make_signer_context(const PublicKey& pk, const SecretKey& sk, std::uint32_t t);

enum class SignerPhase { AwaitE, AwaitResult, Done };

struct SignerSession {
  SignerPhase phase = SignerPhase::AwaitE;
  std::uint32_t t = 0;
  IntMatrix S;  // ephemeral key, F*S == K (mod q)
  IntVector r;
  IntVector x;  // commitment message F*r mod q
  IntVector e;  // challenge received in phase 3
  IntVector z;  // response emitted in phase 3
  std::uint32_t restart_count = 0;
};

struct RestartPayload {
  IntVector a;
  IntVector b;
  IntVector eprime;
  BitString c;
};

SignerSession signer_phase1(const SignerContext& ctx, RandomSource& rng);

/// Fresh r and x for a restart (rejection or validated user request).
/// Throws RestartLimitExceeded past the cap of 64.
void signer_restart(const SignerContext& ctx, SignerSession& s, RandomSource& rng);

/// Returns z on acceptance; nullopt means the sample was rejected and the
/// session restarted (s.x holds the fresh commitment).
std::optional<IntVector> signer_phase3(const SignerContext& ctx, SignerSession& s,
                                       const IntVector& e, RandomSource& rng);

enum class Phase5Kind { Accepted, Restart, AbortAdversary };

struct Phase5Result {
  Phase5Kind kind;
  View view;  // filled when kind == Accepted
};

/// result == nullptr means the user accepted; otherwise the payload is
/// verified and either a restart is granted or the session aborts.
Phase5Result signer_phase5(const SignerContext& ctx, SignerSession& s,
                           const RestartPayload* result);

// ---- User side ----

enum class UserPhase { AwaitX, AwaitZ, Done };

struct UserSession {
  UserPhase phase = UserPhase::AwaitX;
  std::uint32_t t = 0;
  Bytes mu;
  IntMatrix F;
  IntVector x;
  IntVector a;
  IntVector b;
  BitString dprime;
  BitString c;
  IntVector eprime;
  IntVector e;
};

UserSession user_phase2(const PublicKey& pk, std::uint32_t t, const Bytes& mu, const IntVector& x,
                        RandomSource& rng);

struct Phase4Result {
  bool accepted = false;
  Signature sig;            // when accepted
  RestartPayload restart;   // otherwise
};

Phase4Result user_phase4(const PublicKey& pk, UserSession& s, const IntVector& z,
                         RandomSource& rng);

/// Re-enter phase 2 against a fresh x after a restart (new a, b, d').
void user_restart(const PublicKey& pk, UserSession& s, const IntVector& x, RandomSource& rng);

// ---- Orchestration and verification ----

struct SignResult {
  std::uint32_t t = 0;
  Bytes mu;
  Signature sig;
  View view;
  std::uint32_t restarts = 0;
};

SignResult sign_local(const PublicKey& pk, const SecretKey& sk, std::uint32_t t, const Bytes& mu,
                      RandomSource& rng);

bool verify(const PublicKey& pk, std::uint32_t t, const Bytes& mu, const Signature& sig);

// ---- Serialization ----

void write_public_key(std::ostream& os, const PublicKey& pk);
PublicKey read_public_key(std::istream& is);
void write_signature(std::ostream& os, std::uint32_t t, const Signature& sig, const Params& p);
std::pair<std::uint32_t, Signature> read_signature(std::istream& is, const Params& p);

Bytes encode_signature(std::uint32_t t, const Signature& sig, const Params& p);
std::pair<std::uint32_t, Signature> decode_signature(const Bytes& buf, const Params& p);

}  // namespace fsbs
