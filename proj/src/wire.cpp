#include "fsbs/wire.hpp"

#include <sstream>

namespace fsbs {

bool is_valid_kind(std::uint8_t k) {
  return k <= 0x06 || k == 0x7F;
}

Bytes encode(const WireMessage& msg) {
  if (msg.payload.size() > kMaxFrame) throw Error(Errc::DecodeError, "oversize: payload too large");
  Bytes out;
  out.reserve(5 + msg.payload.size());
  out.push_back(std::uint8_t(msg.kind));
  std::uint32_t len = std::uint32_t(msg.payload.size());
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(len >> (8 * i)));
  out.insert(out.end(), msg.payload.begin(), msg.payload.end());
  return out;
}

WireMessage decode(const Bytes& buf) {
  if (buf.size() < 5) throw Error(Errc::DecodeError, "truncated: frame header incomplete");
  if (!is_valid_kind(buf[0])) throw Error(Errc::DecodeError, "bad-kind: unknown message kind");
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= std::uint32_t(buf[1 + i]) << (8 * i);
  if (len > kMaxFrame) throw Error(Errc::DecodeError, "oversize: declared length too large");
  if (buf.size() < 5 + std::size_t(len)) throw Error(Errc::DecodeError, "truncated: payload short");
  if (buf.size() > 5 + std::size_t(len)) throw Error(Errc::DecodeError, "truncated: trailing bytes");
  WireMessage msg;
  msg.kind = MsgKind(buf[0]);
  msg.payload.assign(buf.begin() + 5, buf.end());
  return msg;
}

Bytes encode_hello(std::uint32_t t) {
  Bytes out{kWireVersion};
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(t >> (8 * i)));
  return out;
}

std::uint32_t decode_hello(const Bytes& payload) {
  if (payload.size() != 5) throw Error(Errc::DecodeError, "bad hello length");
  if (payload[0] != kWireVersion) throw Error(Errc::DecodeError, "unsupported protocol version");
  std::uint32_t t = 0;
  for (int i = 0; i < 4; ++i) t |= std::uint32_t(payload[1 + i]) << (8 * i);
  return t;
}

Bytes encode_vector(const IntVector& v) {
  std::ostringstream os(std::ios::binary);
  write_matrix(os, IntMatrix::from_column(v));
  std::string s = os.str();
  return Bytes(s.begin(), s.end());
}

IntVector decode_vector(const Bytes& payload, std::uint32_t expect_len) {
  std::istringstream is(std::string(payload.begin(), payload.end()), std::ios::binary);
  IntMatrix M = read_matrix(is);
  if (is.peek() != std::char_traits<char>::eof())
    throw Error(Errc::DecodeError, "trailing bytes after vector");
  if (M.cols != 1 || M.rows != expect_len) throw Error(Errc::DecodeError, "vector shape mismatch");
  return M.column(0);
}

Bytes encode_restart_payload(const RestartPayload& rp, const Params& p) {
  if (rp.a.size() != p.total_m() || rp.b.size() != p.k || rp.eprime.size() != p.k ||
      rp.c.nbits != kCommitBits)
    throw Error(Errc::ParamError, "restart payload shape mismatch");
  Bytes out;
  Bytes a = encode_vector(rp.a), b = encode_vector(rp.b);
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  std::uint8_t acc = 0;
  for (std::uint32_t j = 0; j < p.k; ++j) {
    std::uint8_t code = rp.eprime[j] == 0 ? 0 : (rp.eprime[j] == 1 ? 1 : 3);
    acc |= std::uint8_t(code << (2 * (j % 4)));
    if (j % 4 == 3 || j + 1 == p.k) {
      out.push_back(acc);
      acc = 0;
    }
  }
  out.insert(out.end(), rp.c.bytes.begin(), rp.c.bytes.end());
  return out;
}

RestartPayload decode_restart_payload(const Bytes& payload, const Params& p) {
  std::istringstream is(std::string(payload.begin(), payload.end()), std::ios::binary);
  RestartPayload rp;
  IntMatrix A = read_matrix(is);
  IntMatrix B = read_matrix(is);
  if (A.cols != 1 || A.rows != p.total_m() || B.cols != 1 || B.rows != p.k)
    throw Error(Errc::DecodeError, "restart payload shape mismatch");
  rp.a = A.column(0);
  rp.b = B.column(0);
  rp.eprime.resize(p.k);
  std::uint8_t acc = 0;
  for (std::uint32_t j = 0; j < p.k; ++j) {
    if (j % 4 == 0) {
      int ch = is.get();
      if (ch < 0) throw Error(Errc::DecodeError, "truncated restart payload");
      acc = std::uint8_t(ch);
    }
    switch ((acc >> (2 * (j % 4))) & 3) {
      case 0: rp.eprime[j] = 0; break;
      case 1: rp.eprime[j] = 1; break;
      case 3: rp.eprime[j] = -1; break;
      default: throw Error(Errc::DecodeError, "invalid challenge code");
    }
  }
  rp.c.nbits = kCommitBits;
  rp.c.bytes.resize(kCommitBits / 8);
  if (!is.read(reinterpret_cast<char*>(rp.c.bytes.data()), std::streamsize(rp.c.bytes.size())))
    throw Error(Errc::DecodeError, "truncated restart payload");
  if (is.peek() != std::char_traits<char>::eof())
    throw Error(Errc::DecodeError, "trailing bytes in restart payload");
  return rp;
}

}  // namespace fsbs
