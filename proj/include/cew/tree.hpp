#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cew/core.hpp"

namespace cew {

/// A decidable, downward-closed set of nodes.
///
/// `child_bound(node)` returns the number of candidate child entries
/// (children are exactly the members node^<j> with j below the bound), or
/// nullopt when the node may have infinitely many children; callers then pass
/// an explicit width.
struct TreeSpec {
  std::function<bool(const Node&)> contains;
  std::function<std::optional<Natural>(const Node&)> child_bound =
      [](const Node&) { return std::optional<Natural>{}; };

  bool operator()(const Node& node) const { return contains(node); }

  static TreeSpec empty();
  /// Every finite sequence, omega^{<omega}.
  static TreeSpec full();
  /// Every sequence over {0,...,k-1}.
  static TreeSpec full_over(Natural k);
};

/// Explicit finite tree, rooted at the empty node, closed downward.
class FiniteTree {
 public:
  FiniteTree() = default;
  /// Throws if `nodes` is not downward closed.
  explicit FiniteTree(std::set<Node> nodes);

  const std::set<Node>& nodes() const { return nodes_; }
  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }
  bool contains(const Node& n) const { return nodes_.contains(n); }
  std::vector<Node> children(const Node& n) const;
  std::size_t height() const;

  TreeSpec as_spec() const;

  nlohmann::json to_json() const;
  static FiniteTree from_json(const nlohmann::json& j);

  bool operator==(const FiniteTree&) const = default;

 private:
  std::set<Node> nodes_;
};

/// Member nodes of length <= depth whose entries are all < width.
FiniteTree truncate(const TreeSpec& t, std::size_t depth, Natural width);

/// rank(leaf) = 0, rank(node) = 1 + max rank of children; returns rank(root).
std::size_t finite_tree_rank(const FiniteTree& t);

/// Canonical form: children's canonical strings sorted, then bracketed.
std::string canonical_form(const FiniteTree& t);
bool tree_isomorphic(const FiniteTree& a, const FiniteTree& b);

/// Subtree above `node` as a tree of relative sequences, T[node].
TreeSpec subtree(const TreeSpec& t, const Node& node);
FiniteTree subtree(const FiniteTree& t, const Node& node);

// Product-alphabet encodings. A tree on 2 x omega stores cantor_pair(a, b) per
// level; a tree on 2 x 2 x omega stores cantor_pair(cantor_pair(a, b), c).

/// T1 on 2 x omega: (sigma, tau) is a member iff sigma is binary and the
/// interleaving sigma(0),tau(0),... lies in t0.
TreeSpec unpair(const TreeSpec& t0);

/// T2 = T1 x 2^{<omega}, the binary coordinate inserted second.
TreeSpec pad_product(const TreeSpec& t1);

/// Collapses the two binary coordinates of T2 through (a, b) -> 2a + b.
TreeSpec pair_coords(const TreeSpec& t2);

/// Encodes a level of each product coordinate into a single node.
Node encode_pairs(const Node& first, const Node& second);
Node encode_triples(const Node& first, const Node& second, const Node& third);
std::pair<Node, Node> decode_pairs(const Node& node);

}  // namespace cew
