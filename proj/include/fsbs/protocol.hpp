#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <string>

#include "fsbs/wire.hpp"

namespace fsbs {

/// Reliable ordered byte stream (loopback pipe or TCP socket).
class ByteStream {
 public:
  virtual ~ByteStream() = default;
  virtual void send(const Bytes& data) = 0;
  /// Blocks for at least one byte; returns bytes read, 0 on clean EOF.
  virtual std::size_t recv(std::uint8_t* out, std::size_t max) = 0;
  virtual void close() = 0;
};

/// In-memory duplex pipe; each endpoint is single-owner, the pair is
/// safe to drive from two threads.
std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> make_pipe();

class TcpListener {
 public:
  explicit TcpListener(const std::string& addr);  // "host:port", port 0 = ephemeral
  ~TcpListener();
  std::string local_addr() const;
  std::unique_ptr<ByteStream> accept();
  void close();

 private:
  int fd_ = -1;
  std::string addr_;
};

std::unique_ptr<ByteStream> tcp_connect(const std::string& addr);

// ---- Framed transport ----

void send_message(ByteStream& s, const WireMessage& msg);
/// nullopt on clean EOF at a frame boundary; DecodeError otherwise.
std::optional<WireMessage> recv_message(ByteStream& s);

enum class Direction { Sent, Received };

struct TranscriptEntry {
  Direction dir;
  WireMessage msg;
  std::chrono::steady_clock::time_point at;
};

using SessionTranscript = std::vector<TranscriptEntry>;

/// Checks the session grammar: HELLO, then X, then (E, (Z (RESULT_ACCEPT |
/// RESULT_RESTART RESTART_X) | RESTART_X))* ending with RESULT_ACCEPT or ABORT.
bool transcript_grammar_ok(const SessionTranscript& tr);

// ---- Session drivers ----

struct SignerOutcome {
  enum class Kind { Completed, AbortAdversary, ProtocolAbort } kind;
  View view;  // when Completed
  std::string detail;
  SessionTranscript transcript;
};

/// Serves exactly one session on the stream (one session per connection).
SignerOutcome run_signer_session(ByteStream& stream, const SignerContext& ctx, RandomSource& rng);

struct UserOutcome {
  bool ok = false;
  std::uint32_t t = 0;
  Signature sig;
  std::string detail;
  SessionTranscript transcript;
};

UserOutcome run_user_session(ByteStream& stream, const PublicKey& pk, std::uint32_t t,
                             const Bytes& mu, RandomSource& rng);

/// Accepts and serves `sessions` connections concurrently (thread per
/// connection), then returns the outcomes. The context is immutable and
/// shared; per-connection randomness is forked from `rng` by index before
/// any thread starts.
std::vector<SignerOutcome> serve_sessions(TcpListener& listener, const SignerContext& ctx,
                                          RandomSource& rng, std::uint32_t sessions);

}  // namespace fsbs
