#include "fsbs/timetree.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "fsbs/core.hpp"

namespace fsbs {

bool NodeId::is_prefix_of(const NodeId& other) const {
  if (bits.size() > other.bits.size()) return false;
  return std::equal(bits.begin(), bits.end(), other.bits.begin());
}

std::string NodeId::to_string() const {
  if (bits.empty()) return "eps";
  std::string s;
  for (std::uint8_t b : bits) s.push_back(char('0' + b));
  return s;
}

NodeId NodeId::parse(const std::string& s) {
  NodeId n;
  if (s == "eps") return n;
  for (char c : s) {
    if (c != '0' && c != '1') throw Error(Errc::ParamError, "bad node id: " + s);
    n.bits.push_back(std::uint8_t(c - '0'));
  }
  return n;
}

bool NodeOrder::operator()(const NodeId& a, const NodeId& b) const {
  if (a.bits.size() != b.bits.size()) return a.bits.size() < b.bits.size();
  return a.bits < b.bits;
}

NodeId leaf_path(std::uint32_t t, std::uint32_t ell) {
  if (ell >= 32 || t >= (1u << ell)) throw Error(Errc::ParamError, "leaf index out of range");
  NodeId n;
  n.bits.resize(ell);
  for (std::uint32_t i = 0; i < ell; ++i) n.bits[i] = (t >> (ell - 1 - i)) & 1;
  return n;
}

std::vector<NodeId> minimal_cover(std::uint32_t t, std::uint32_t ell) {
  const std::uint32_t tau = 1u << ell;
  if (ell >= 32 || t >= tau) throw Error(Errc::ParamError, "time period out of range");
  // canonical aligned-block decomposition of [t, tau)
  std::vector<NodeId> cover;
  std::uint32_t lo = t;
  while (lo < tau) {
    std::uint32_t size = lo == 0 ? tau : (lo & -lo);
    while (lo + size > tau) size >>= 1;
    std::uint32_t lg = std::uint32_t(std::countr_zero(size));
    std::uint32_t depth = ell - lg;
    NodeId n;
    n.bits.resize(depth);
    std::uint32_t val = lo >> lg;
    for (std::uint32_t i = 0; i < depth; ++i) n.bits[i] = (val >> (depth - 1 - i)) & 1;
    cover.push_back(std::move(n));
    lo += size;
  }
  std::sort(cover.begin(), cover.end(), NodeOrder{});
  return cover;
}

IntMatrix node_matrix(const PublicKey& pk, const NodeId& w) {
  std::vector<IntMatrix> parts;
  parts.push_back(pk.A0);
  for (std::size_t i = 0; i < w.bits.size(); ++i) parts.push_back(pk.side(std::uint32_t(i) + 1, w.bits[i]));
  return concat_cols(parts);
}

NodeKey derive_node_key(const PublicKey& pk, const NodeKey& ancestor_key, const NodeId& w) {
  if (!ancestor_key.node.is_prefix_of(w))
    throw Error(Errc::NotAnAncestor, ancestor_key.node.to_string() + " does not cover " + w.to_string());
  if (ancestor_key.node == w) return ancestor_key;
  const Modulus q(pk.params.q);
  IntMatrix Fw = node_matrix(pk, w);
  std::uint32_t anc_width = std::uint32_t(ancestor_key.node.depth() + 1) * pk.params.m;
  IntMatrix T = ext_basis(Fw, 0, anc_width, ancestor_key.basis, q);
  IntMatrix check = mat_mul_mod(Fw, T, q);
  for (Int v : check.a)
    if (v != 0) throw Error(Errc::InvalidTrapdoor, "derived basis fails kernel check");
  return NodeKey{w, std::move(T)};
}

namespace {

void wipe(IntMatrix& M) {
  volatile Int* p = M.a.data();
  for (std::size_t i = 0; i < M.a.size(); ++i) p[i] = 0;
  M.a.clear();
}

}  // namespace

SecretKey key_update(const PublicKey& pk, SecretKey&& sk) {
  const std::uint32_t tau = 1u << sk.depth;
  if (sk.empty() || sk.t >= tau) throw Error(Errc::LastPeriod, "key already empty");
  SecretKey next;
  next.depth = sk.depth;
  next.t = sk.t + 1;
  if (sk.t == tau - 1) {
    for (auto& [id, key] : sk.nodes) wipe(key.basis);
    sk.nodes.clear();
    return next;  // explicit empty key for sk_tau
  }
  std::vector<NodeId> cover = minimal_cover(next.t, sk.depth);
  for (const NodeId& id : cover) {
    auto it = sk.nodes.find(id);
    if (it != sk.nodes.end()) {
      next.nodes.emplace(id, std::move(it->second));
      continue;
    }
    // deepest stored ancestor; exists by the cover property
    const NodeKey* best = nullptr;
    for (const auto& [aid, akey] : sk.nodes)
      if (aid.is_prefix_of(id) && (!best || aid.depth() > best->node.depth())) best = &akey;
    if (!best) throw Error(Errc::InternalError, "no ancestor for " + id.to_string());
    next.nodes.emplace(id, derive_node_key(pk, *best, id));
  }
  for (auto& [id, key] : sk.nodes)
    if (!key.basis.a.empty() && !next.nodes.count(id)) wipe(key.basis);
  sk.nodes.clear();
  return next;
}

void write_secret_key(std::ostream& os, const SecretKey& sk) {
  os.write("FSSK", 4);
  os.put(1);  // version
  for (int i = 0; i < 4; ++i) os.put(char(std::uint8_t(sk.t >> (8 * i))));
  os.put(char(std::uint8_t(sk.depth)));
  std::uint16_t count = std::uint16_t(sk.nodes.size());
  os.put(char(std::uint8_t(count)));
  os.put(char(std::uint8_t(count >> 8)));
  for (const auto& [id, key] : sk.nodes) {
    os.put(char(std::uint8_t(id.bits.size())));
    std::uint8_t acc = 0;
    for (std::size_t i = 0; i < id.bits.size(); ++i) {
      acc |= std::uint8_t(id.bits[i] << (i % 8));
      if (i % 8 == 7 || i + 1 == id.bits.size()) {
        os.put(char(acc));
        acc = 0;
      }
    }
    write_matrix(os, key.basis);
  }
  if (!os) throw Error(Errc::IoError, "secret key write failed");
}

SecretKey read_secret_key(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "FSSK", 4) != 0)
    throw Error(Errc::DecodeError, "bad secret key magic");
  if (is.get() != 1) throw Error(Errc::DecodeError, "unsupported secret key version");
  SecretKey sk;
  std::uint32_t t = 0;
  for (int i = 0; i < 4; ++i) {
    int ch = is.get();
    if (ch < 0) throw Error(Errc::DecodeError, "truncated secret key");
    t |= std::uint32_t(std::uint8_t(ch)) << (8 * i);
  }
  sk.t = t;
  int depth = is.get();
  if (depth < 0 || depth >= 32) throw Error(Errc::DecodeError, "bad tree depth");
  sk.depth = std::uint32_t(depth);
  int c0 = is.get(), c1 = is.get();
  if (c0 < 0 || c1 < 0) throw Error(Errc::DecodeError, "truncated secret key");
  std::uint32_t count = std::uint32_t(c0) | std::uint32_t(c1) << 8;
  for (std::uint32_t i = 0; i < count; ++i) {
    int len = is.get();
    if (len < 0 || len > depth) throw Error(Errc::DecodeError, "bad node path length");
    NodeId id;
    id.bits.resize(std::size_t(len));
    std::uint8_t acc = 0;
    for (std::size_t j = 0; j < id.bits.size(); ++j) {
      if (j % 8 == 0) {
        int ch = is.get();
        if (ch < 0) throw Error(Errc::DecodeError, "truncated node path");
        acc = std::uint8_t(ch);
      }
      id.bits[j] = (acc >> (j % 8)) & 1;
    }
    NodeKey key{id, read_matrix(is)};
    sk.nodes.emplace(id, std::move(key));
  }
  if (!sk.nodes.empty()) {
    std::vector<NodeId> expect = minimal_cover(sk.t, sk.depth);
    if (expect.size() != sk.nodes.size() ||
        !std::equal(expect.begin(), expect.end(), sk.nodes.begin(),
                    [](const NodeId& a, const auto& b) { return a == b.first; }))
      throw Error(Errc::DecodeError, "node set is not the minimal cover of t");
  } else if (sk.t != (1u << sk.depth)) {
    throw Error(Errc::DecodeError, "empty key with non-final period");
  }
  return sk;
}

}  // namespace fsbs
