#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cew/core.hpp"
#include "cew/tree.hpp"

namespace cew {

/// A decidable strict order on a finite enumerated carrier.
///
/// `elements` is the carrier truncation in enumeration order (not sorted);
/// `less` decides the order on any pair of carrier elements.
template <class T>
class LinearOrder {
 public:
  using value_type = T;
  using Less = std::function<bool(const T&, const T&)>;

  LinearOrder(std::vector<T> elements, Less less)
      : elements_(std::move(elements)), less_(std::move(less)) {}

  const std::vector<T>& elements() const { return elements_; }
  std::size_t size() const { return elements_.size(); }
  bool less(const T& a, const T& b) const { return less_(a, b); }
  const Less& comparator() const { return less_; }

  /// Carrier in increasing order.
  std::vector<T> sorted() const {
    std::vector<T> out = elements_;
    std::stable_sort(out.begin(), out.end(), less_);
    return out;
  }

 private:
  std::vector<T> elements_;
  Less less_;
};

struct OrderViolation {
  std::string law;  // "irreflexive", "asymmetric", "total", "transitive"
  std::vector<std::size_t> witness;  // indices into elements()
};

/// Exhaustive check of the strict total order laws over all pairs and triples.
template <class T>
std::optional<OrderViolation> check_strict_total(const LinearOrder<T>& order) {
  const auto& xs = order.elements();
  const std::size_t n = xs.size();
  std::vector<std::vector<char>> lt(n, std::vector<char>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) lt[i][j] = order.less(xs[i], xs[j]);
  for (std::size_t i = 0; i < n; ++i) {
    if (lt[i][i]) return OrderViolation{"irreflexive", {i}};
    for (std::size_t j = i + 1; j < n; ++j) {
      if (lt[i][j] && lt[j][i]) return OrderViolation{"asymmetric", {i, j}};
      if (!lt[i][j] && !lt[j][i]) return OrderViolation{"total", {i, j}};
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (!lt[i][j]) continue;
      for (std::size_t k = 0; k < n; ++k)
        if (lt[j][k] && !lt[i][k]) return OrderViolation{"transitive", {i, j, k}};
    }
  return std::nullopt;
}

/// Longest strictly descending chain, greatest element first.
template <class T>
std::vector<T> longest_descending_chain(const LinearOrder<T>& order) {
  std::vector<T> chain = order.sorted();
  std::reverse(chain.begin(), chain.end());
  return chain;
}

/// Kleene-Brouwer comparison: a < b iff a properly extends b, or at the first
/// difference a has the smaller entry.
bool kb_less(const Node& a, const Node& b);

LinearOrder<Node> kleene_brouwer(const TreeSpec& t, std::size_t depth, Natural width);
LinearOrder<Node> kleene_brouwer(const FiniteTree& t);

/// L * omega truncated to `copies` copies: (i,a) < (j,b) iff i < j, or i = j
/// and a < b.
template <class T>
LinearOrder<std::pair<Natural, T>> omega_multiple(const LinearOrder<T>& l, Natural copies) {
  std::vector<std::pair<Natural, T>> carrier;
  carrier.reserve(l.size() * copies);
  for (Natural i = 0; i < copies; ++i)
    for (const T& a : l.elements()) carrier.emplace_back(i, a);
  auto less = l.comparator();
  return {std::move(carrier), [less](const std::pair<Natural, T>& x, const std::pair<Natural, T>& y) {
            if (x.first != y.first) return x.first < y.first;
            return less(x.second, y.second);
          }};
}

/// Intermediate trees of the linearization pipeline.
struct IPipeline {
  TreeSpec t1;  // unpair(t0), on 2 x omega
  TreeSpec t2;  // t1 x 2^{<omega}
  TreeSpec t3;  // first two coordinates paired
  TreeSpec t4;  // override, or t3
};

IPipeline i_pipeline(const TreeSpec& t0, const std::optional<TreeSpec>& t4_override = std::nullopt);

/// Kleene-Brouwer order of T4 (truncated at depth/width), times omega
/// (truncated at `copies`).
LinearOrder<std::pair<Natural, Node>> i_transform(const TreeSpec& t0,
                                                  const std::optional<TreeSpec>& t4_override,
                                                  std::size_t depth, Natural width,
                                                  Natural copies);

/// Tree of finite descending sequences. Entries are indices into
/// `l.elements()`; <a0,...,ak-1> is a member iff a0 > a1 > ... in l.
template <class T>
TreeSpec descending_sequence_tree(const LinearOrder<T>& l) {
  auto order = std::make_shared<const LinearOrder<T>>(l);
  const Natural n = l.size();
  return {[order, n](const Node& node) {
            for (std::size_t i = 0; i < node.size(); ++i) {
              if (node[i] >= n) return false;
              if (i > 0 && !order->less(order->elements()[node[i]], order->elements()[node[i - 1]]))
                return false;
            }
            return true;
          },
          [n](const Node&) { return std::optional<Natural>{n}; }};
}

/// Finite Boolean algebra generated by the half-open intervals [a,b) and
/// [a,+inf) over a carrier sample, presented by its atoms.
template <class T>
struct IntervalAlgebra {
  std::vector<std::vector<T>> atoms;  // in increasing order of the sample

  /// Number of elements of the algebra, 2^{#atoms}.
  Natural size() const { return Natural{1} << atoms.size(); }
};

/// Samples the first n carrier elements. Atoms are the maximal regions on
/// which every generator is constant.
template <class T>
IntervalAlgebra<T> interval_algebra(const LinearOrder<T>& l, std::size_t n) {
  if (l.size() < n) {
    throw Error("interval_algebra: carrier has " + std::to_string(l.size()) +
                " elements, sample needs " + std::to_string(n));
  }
  std::vector<T> sample(l.elements().begin(), l.elements().begin() + static_cast<std::ptrdiff_t>(n));
  std::stable_sort(sample.begin(), sample.end(), l.comparator());
  // Membership signature of each sampled element across all generators.
  std::vector<std::vector<char>> signature(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t x = 0; x < n; ++x) {
      const bool above_a = !l.less(sample[x], sample[a]);
      signature[x].push_back(above_a);  // [a, +inf)
      for (std::size_t b = 0; b < n; ++b) {
        if (!l.less(sample[a], sample[b])) continue;
        signature[x].push_back(above_a && l.less(sample[x], sample[b]));  // [a, b)
      }
    }
  }
  IntervalAlgebra<T> out;
  std::vector<std::vector<char>> seen;
  for (std::size_t x = 0; x < n; ++x) {
    auto it = std::find(seen.begin(), seen.end(), signature[x]);
    if (it == seen.end()) {
      seen.push_back(signature[x]);
      out.atoms.push_back({sample[x]});
    } else {
      out.atoms[static_cast<std::size_t>(it - seen.begin())].push_back(sample[x]);
    }
  }
  return out;
}

}  // namespace cew
