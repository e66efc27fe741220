#include "cew/core.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

namespace cew {

std::pair<Natural, Natural> cantor_unpair(Natural z) {
  // w = floor((sqrt(8z+1)-1)/2), corrected for floating point drift.
  auto w = static_cast<Natural>((std::sqrt(8.0L * static_cast<long double>(z) + 1.0L) - 1.0L) / 2.0L);
  while (w * (w + 1) / 2 > z) --w;
  while ((w + 1) * (w + 2) / 2 <= z) ++w;
  const Natural b = z - w * (w + 1) / 2;
  return {w - b, b};
}

bool is_prefix(const Node& prefix, const Node& node) {
  return prefix.size() <= node.size() && std::equal(prefix.begin(), prefix.end(), node.begin());
}

bool left_of(const Node& a, const Node& b) {
  const auto n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

Node meet(const Node& a, const Node& b) {
  Node out;
  const auto n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n && a[i] == b[i]; ++i) out.push_back(a[i]);
  return out;
}

std::string node_to_string(const Node& node) {
  std::string s = "<";
  for (std::size_t i = 0; i < node.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(node[i]);
  }
  return s + ">";
}

SetAlgebra snapshot_algebra(const FiniteSet& a, const FiniteSet& b) {
  SetAlgebra out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                 std::inserter(out.set_union, out.set_union.end()));
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::inserter(out.set_intersection, out.set_intersection.end()));
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::inserter(out.a_minus_b, out.a_minus_b.end()));
  std::set_difference(b.begin(), b.end(), a.begin(), a.end(),
                      std::inserter(out.b_minus_a, out.b_minus_a.end()));
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(),
                                std::inserter(out.symmetric_difference,
                                              out.symmetric_difference.end()));
  return out;
}

}  // namespace cew
