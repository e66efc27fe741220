#include "cew/listing.hpp"

#include <algorithm>
#include <numeric>

namespace cew {
namespace {

// Every chi with |chi| + sum(chi) = weight.
void sequences_of_weight(Natural weight, Node& prefix, std::vector<Node>& out) {
  if (weight == 0) {
    out.push_back(prefix);
    return;
  }
  for (Natural a = 0; a + 1 <= weight; ++a) {
    prefix.push_back(a);
    sequences_of_weight(weight - a - 1, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

Natural Listing::rank(const Node& chi, Natural k) {
  return chi.size() + k + std::accumulate(chi.begin(), chi.end(), Natural{0});
}

void Listing::extend_rank() {
  const Natural r = next_rank_++;
  for (Natural k = 0; k <= r; ++k) {
    std::vector<Node> chis;
    Node prefix;
    sequences_of_weight(r - k, prefix, chis);
    std::sort(chis.begin(), chis.end());
    for (Node& chi : chis) {
      ListEntry e{std::move(chi), k};
      index_.emplace(e, entries_.size() + 1);
      entries_.push_back(std::move(e));
    }
  }
}

const ListEntry& Listing::at(std::size_t index) {
  if (index == 0) throw Error("listing is indexed from 1");
  while (entries_.size() < index) extend_rank();
  return entries_[index - 1];
}

std::size_t Listing::index_of(const Node& chi, Natural k) {
  const Natural r = rank(chi, k);
  while (next_rank_ <= r) extend_rank();
  return index_.at(ListEntry{chi, k});
}

}  // namespace cew
