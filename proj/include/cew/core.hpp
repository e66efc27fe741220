#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace cew {

using Natural = std::uint64_t;
using Stage = std::uint64_t;

/// A finite sequence of naturals. The empty node is the root.
using Node = std::vector<Natural>;

using FiniteSet = std::set<Natural>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cantor pairing, <a,b> = (a+b)(a+b+1)/2 + b.
constexpr Natural cantor_pair(Natural a, Natural b) {
  return (a + b) * (a + b + 1) / 2 + b;
}

std::pair<Natural, Natural> cantor_unpair(Natural z);

/// `prefix` is an initial segment of `node` (not necessarily proper).
bool is_prefix(const Node& prefix, const Node& node);

/// Left-of on sequences: at the first difference `a` has the smaller entry.
/// Neither extends the other.
bool left_of(const Node& a, const Node& b);

/// Longest common prefix.
Node meet(const Node& a, const Node& b);

std::string node_to_string(const Node& node);

struct SetAlgebra {
  FiniteSet set_union;
  FiniteSet set_intersection;
  FiniteSet a_minus_b;
  FiniteSet b_minus_a;
  FiniteSet symmetric_difference;
};

SetAlgebra snapshot_algebra(const FiniteSet& a, const FiniteSet& b);

}  // namespace cew
