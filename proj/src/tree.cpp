#include "cew/tree.hpp"

#include <algorithm>
#include <deque>

namespace cew {

TreeSpec TreeSpec::empty() {
  return {[](const Node&) { return false; }, [](const Node&) { return std::optional<Natural>{0}; }};
}

TreeSpec TreeSpec::full() {
  return {[](const Node&) { return true; }};
}

TreeSpec TreeSpec::full_over(Natural k) {
  return {[k](const Node& n) { return std::all_of(n.begin(), n.end(), [k](Natural x) { return x < k; }); },
          [k](const Node&) { return std::optional<Natural>{k}; }};
}

FiniteTree::FiniteTree(std::set<Node> nodes) : nodes_(std::move(nodes)) {
  for (const Node& n : nodes_) {
    if (n.empty()) continue;
    Node parent(n.begin(), n.end() - 1);
    if (!nodes_.contains(parent)) {
      throw Error("tree is not downward closed: " + node_to_string(n) + " has no parent");
    }
  }
}

std::vector<Node> FiniteTree::children(const Node& n) const {
  std::vector<Node> out;
  // Children of n are contiguous in lexicographic order right after n.
  for (auto it = nodes_.upper_bound(n); it != nodes_.end() && is_prefix(n, *it); ++it) {
    if (it->size() == n.size() + 1) out.push_back(*it);
  }
  return out;
}

std::size_t FiniteTree::height() const {
  std::size_t h = 0;
  for (const Node& n : nodes_) h = std::max(h, n.size());
  return h;
}

TreeSpec FiniteTree::as_spec() const {
  auto nodes = std::make_shared<const std::set<Node>>(nodes_);
  return {[nodes](const Node& n) { return nodes->contains(n); },
          [nodes](const Node& n) {
            Natural bound = 0;
            for (auto it = nodes->upper_bound(n); it != nodes->end() && is_prefix(n, *it); ++it) {
              if (it->size() == n.size() + 1) bound = std::max(bound, it->back() + 1);
            }
            return std::optional<Natural>{bound};
          }};
}

nlohmann::json FiniteTree::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const Node& n : nodes_) arr.push_back(n);
  return {{"nodes", arr}};
}

FiniteTree FiniteTree::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("nodes") || !j["nodes"].is_array()) {
    throw Error("tree JSON: expected {\"nodes\": [[...], ...]}");
  }
  std::set<Node> nodes;
  for (const auto& n : j["nodes"]) {
    if (!n.is_array()) throw Error("tree JSON: each node must be an array of naturals");
    Node node;
    for (const auto& x : n) {
      if (!x.is_number_unsigned()) throw Error("tree JSON: entries must be naturals");
      node.push_back(x.get<Natural>());
    }
    nodes.insert(std::move(node));
  }
  return FiniteTree(std::move(nodes));
}

FiniteTree truncate(const TreeSpec& t, std::size_t depth, Natural width) {
  std::set<Node> out;
  if (!t.contains(Node{})) return FiniteTree{};
  std::deque<Node> queue{Node{}};
  while (!queue.empty()) {
    Node n = std::move(queue.front());
    queue.pop_front();
    if (n.size() < depth) {
      Natural limit = width;
      if (auto b = t.child_bound(n)) limit = std::min(limit, *b);
      for (Natural j = 0; j < limit; ++j) {
        Node child = n;
        child.push_back(j);
        if (t.contains(child)) queue.push_back(std::move(child));
      }
    }
    out.insert(std::move(n));
  }
  return FiniteTree(std::move(out));
}

namespace {

std::size_t rank_of(const FiniteTree& t, const Node& n) {
  std::size_t r = 0;
  for (const Node& c : t.children(n)) r = std::max(r, 1 + rank_of(t, c));
  return r;
}

std::string canon_of(const FiniteTree& t, const Node& n) {
  std::vector<std::string> parts;
  for (const Node& c : t.children(n)) parts.push_back(canon_of(t, c));
  std::sort(parts.begin(), parts.end());
  std::string s = "(";
  for (const auto& p : parts) s += p;
  return s + ")";
}

}  // namespace

std::size_t finite_tree_rank(const FiniteTree& t) {
  if (t.empty()) throw Error("rank of the empty tree is undefined");
  return rank_of(t, Node{});
}

std::string canonical_form(const FiniteTree& t) {
  return t.empty() ? std::string{} : canon_of(t, Node{});
}

bool tree_isomorphic(const FiniteTree& a, const FiniteTree& b) {
  return a.size() == b.size() && canonical_form(a) == canonical_form(b);
}

TreeSpec subtree(const TreeSpec& t, const Node& node) {
  auto join = [node](const Node& rel) {
    Node full = node;
    full.insert(full.end(), rel.begin(), rel.end());
    return full;
  };
  return {[t, join](const Node& rel) { return t.contains(join(rel)); },
          [t, join](const Node& rel) { return t.child_bound(join(rel)); }};
}

FiniteTree subtree(const FiniteTree& t, const Node& node) {
  std::set<Node> out;
  for (const Node& n : t.nodes()) {
    if (is_prefix(node, n)) out.emplace(n.begin() + static_cast<std::ptrdiff_t>(node.size()), n.end());
  }
  return FiniteTree(std::move(out));
}

Node encode_pairs(const Node& first, const Node& second) {
  if (first.size() != second.size()) throw Error("encode_pairs: coordinate lengths differ");
  Node out(first.size());
  for (std::size_t i = 0; i < first.size(); ++i) out[i] = cantor_pair(first[i], second[i]);
  return out;
}

Node encode_triples(const Node& first, const Node& second, const Node& third) {
  return encode_pairs(encode_pairs(first, second), third);
}

std::pair<Node, Node> decode_pairs(const Node& node) {
  std::pair<Node, Node> out;
  for (Natural z : node) {
    auto [a, b] = cantor_unpair(z);
    out.first.push_back(a);
    out.second.push_back(b);
  }
  return out;
}

TreeSpec unpair(const TreeSpec& t0) {
  return {[t0](const Node& n) {
    auto [sigma, tau] = decode_pairs(n);
    if (std::any_of(sigma.begin(), sigma.end(), [](Natural b) { return b > 1; })) return false;
    Node interleaved;
    for (std::size_t i = 0; i < n.size(); ++i) {
      interleaved.push_back(sigma[i]);
      interleaved.push_back(tau[i]);
    }
    return t0.contains(interleaved);
  }};
}

TreeSpec pad_product(const TreeSpec& t1) {
  return {[t1](const Node& n) {
    auto [inner, rho] = decode_pairs(n);
    auto [sigma, tau] = decode_pairs(inner);
    if (std::any_of(tau.begin(), tau.end(), [](Natural b) { return b > 1; })) return false;
    return t1.contains(encode_pairs(sigma, rho));
  }};
}

TreeSpec pair_coords(const TreeSpec& t2) {
  return {[t2](const Node& n) {
    auto [joint, rho] = decode_pairs(n);
    Node sigma, tau;
    for (Natural q : joint) {
      if (q > 3) return false;
      sigma.push_back(q / 2);
      tau.push_back(q % 2);
    }
    return t2.contains(encode_triples(sigma, tau, rho));
  }};
}

}  // namespace cew
