#pragma once

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "cew/core.hpp"

namespace cew {

/// (chi, k): a node of omega^<omega and a natural.
using ListEntry = std::pair<Node, Natural>;

/// One-to-one onto listing l(1), l(2), ... of pairs (chi, k), graded by
/// r(chi, k) = |chi| + k + sum(chi); within a rank smaller k first, then chi
/// lexicographically. A proper prefix of chi or a smaller k has a strictly
/// smaller rank, so the prefix property holds by construction.
///
/// Entries are generated lazily rank by rank. Not thread-safe.
class Listing {
 public:
  static Natural rank(const Node& chi, Natural k);

  /// l(index), index >= 1.
  const ListEntry& at(std::size_t index);
  /// The index of (chi, k).
  std::size_t index_of(const Node& chi, Natural k);
  /// Number of entries generated so far.
  std::size_t generated() const { return entries_.size(); }

 private:
  void extend_rank();

  std::vector<ListEntry> entries_;
  std::map<ListEntry, std::size_t> index_;
  Natural next_rank_ = 0;
};

}  // namespace cew
