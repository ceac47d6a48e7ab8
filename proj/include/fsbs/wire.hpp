#pragma once

#include <cstdint>
#include <vector>

#include "fsbs/core.hpp"

namespace fsbs {

constexpr std::uint8_t kWireVersion = 0x01;
constexpr std::size_t kMaxFrame = 1u << 26;

enum class MsgKind : std::uint8_t {
  Hello = 0x00,
  X = 0x01,
  E = 0x02,
  Z = 0x03,
  ResultAccept = 0x04,
  ResultRestart = 0x05,
  RestartX = 0x06,
  Abort = 0x7F,
};

bool is_valid_kind(std::uint8_t k);

struct WireMessage {
  MsgKind kind = MsgKind::Abort;
  Bytes payload;

  bool operator==(const WireMessage&) const = default;
};

/// kind (1 byte) || length (u32 LE) || payload.
Bytes encode(const WireMessage& msg);
/// Strict: consumes the whole buffer. DecodeError on truncated frames,
/// unknown kinds, oversize lengths, or trailing bytes.
WireMessage decode(const Bytes& buf);

// Payload builders/parsers. Vectors ride as 1-column FSM1 matrix blocks;
// the restart payload reuses the signature file's e'/d' field encodings.
Bytes encode_hello(std::uint32_t t);
std::uint32_t decode_hello(const Bytes& payload);
Bytes encode_vector(const IntVector& v);
IntVector decode_vector(const Bytes& payload, std::uint32_t expect_len);
Bytes encode_restart_payload(const RestartPayload& rp, const Params& p);
RestartPayload decode_restart_payload(const Bytes& payload, const Params& p);

}  // namespace fsbs
