#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

#include "fsbs/trapdoor.hpp"

namespace fsbs {

struct PublicKey;  // core.hpp

/// Path from the root: bits[0] is the level-1 branch. Empty = root.
struct NodeId {
  std::vector<std::uint8_t> bits;

  std::size_t depth() const { return bits.size(); }
  bool is_prefix_of(const NodeId& other) const;
  std::string to_string() const;  // "eps" for the root, else e.g. "001"
  static NodeId parse(const std::string& s);

  auto operator<=>(const NodeId&) const = default;
};

/// Orders by (depth, value); the canonical serialization order of covers.
struct NodeOrder {
  bool operator()(const NodeId& a, const NodeId& b) const;
};

/// Trapdoor basis for the kernel lattice of the node's concatenated matrix.
struct NodeKey {
  NodeId node;
  IntMatrix basis;  // ((depth+1)m) x ((depth+1)m)
};

/// sk_t: the node keys of the minimal cover of [t, 2^l). An empty node map
/// with t == tau represents the post-final-period empty key.
struct SecretKey {
  std::uint32_t t = 0;
  std::uint32_t depth = 0;  // tree depth l
  std::map<NodeId, NodeKey, NodeOrder> nodes;

  bool empty() const { return nodes.empty(); }
};

NodeId leaf_path(std::uint32_t t, std::uint32_t ell);

/// The unique minimal node set covering leaves {t..2^l - 1} and containing
/// no ancestor of any earlier leaf. Ordered by (depth, value).
std::vector<NodeId> minimal_cover(std::uint32_t t, std::uint32_t ell);

/// F_w = [A0 | A_1^{(w1)} | ... | A_len^{(w_len)}]
IntMatrix node_matrix(const PublicKey& pk, const NodeId& w);

/// Delegate the ancestor's trapdoor down to node w (ancestor must be a
/// prefix of w; equal returns the key unchanged).
NodeKey derive_node_key(const PublicKey& pk, const NodeKey& ancestor_key, const NodeId& w);

/// sk_t -> sk_{t+1}. The input is consumed: its bases are wiped. At the last
/// period the result is the explicit empty key.
SecretKey key_update(const PublicKey& pk, SecretKey&& sk);

void write_secret_key(std::ostream& os, const SecretKey& sk);
SecretKey read_secret_key(std::istream& is);

}  // namespace fsbs
