#include "cew/order.hpp"

namespace cew {

bool kb_less(const Node& a, const Node& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return a.size() > b.size();
}

LinearOrder<Node> kleene_brouwer(const FiniteTree& t) {
  std::vector<Node> carrier(t.nodes().begin(), t.nodes().end());
  return {std::move(carrier), kb_less};
}

LinearOrder<Node> kleene_brouwer(const TreeSpec& t, std::size_t depth, Natural width) {
  return kleene_brouwer(truncate(t, depth, width));
}

IPipeline i_pipeline(const TreeSpec& t0, const std::optional<TreeSpec>& t4_override) {
  IPipeline p;
  p.t1 = unpair(t0);
  p.t2 = pad_product(p.t1);
  p.t3 = pair_coords(p.t2);
  p.t4 = t4_override ? *t4_override : p.t3;
  return p;
}

LinearOrder<std::pair<Natural, Node>> i_transform(const TreeSpec& t0,
                                                  const std::optional<TreeSpec>& t4_override,
                                                  std::size_t depth, Natural width,
                                                  Natural copies) {
  const IPipeline p = i_pipeline(t0, t4_override);
  return omega_multiple(kleene_brouwer(p.t4, depth, width), copies);
}

}  // namespace cew
