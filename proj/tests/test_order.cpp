#include <doctest.h>

#include <random>

#include "cew/order.hpp"
#include "oracles.hpp"

using namespace cew;

namespace {

FiniteTree make(std::initializer_list<Node> nodes) { return FiniteTree(std::set<Node>(nodes)); }

LinearOrder<Natural> naturals(Natural n) {
  std::vector<Natural> xs;
  for (Natural i = 0; i < n; ++i) xs.push_back(i);
  return {xs, [](Natural a, Natural b) { return a < b; }};
}

TreeSpec zero_path_tree() {
  return {[](const Node& n) { return std::all_of(n.begin(), n.end(), [](Natural x) { return x == 0; }); }};
}

}  // namespace

TEST_CASE("kleene_brouwer: small tree, all pairs against the definition") {
  auto kb = kleene_brouwer(make({{}, {0}, {1}, {0, 0}}));
  const std::vector<Node> expected{{0, 0}, {0}, {1}, {}};
  CHECK(kb.sorted() == expected);
  // definition checked by hand on all 6 pairs
  CHECK(kb.less({0, 0}, {0}));
  CHECK(kb.less({0, 0}, {1}));
  CHECK(kb.less({0, 0}, {}));
  CHECK(kb.less({0}, {1}));
  CHECK(kb.less({0}, {}));
  CHECK(kb.less({1}, {}));
  CHECK_FALSE(check_strict_total(kb));
}

TEST_CASE("kleene_brouwer: singleton and chains") {
  CHECK(kleene_brouwer(make({{}})).size() == 1);
  for (std::size_t d : {1u, 4u, 9u}) {
    auto kb = kleene_brouwer(zero_path_tree(), d, 5);
    CHECK(kb.size() == d + 1);
    auto chain = longest_descending_chain(kb);
    CHECK(chain.size() == d + 1);
    CHECK(chain.front() == Node{});
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) CHECK(kb.less(chain[i + 1], chain[i]));
  }
}

TEST_CASE("kleene_brouwer: extension implies smaller; total on random truncations") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::set<Node> nodes{Node{}};
    for (int i = 0; i < 40; ++i) {
      Node n(*std::next(nodes.begin(), static_cast<long>(rng() % nodes.size())));
      if (n.size() < 5) n.push_back(rng() % 4);
      nodes.insert(n);
    }
    auto kb = kleene_brouwer(FiniteTree(nodes));
    CHECK_FALSE(check_strict_total(kb));
    for (const Node& a : nodes)
      for (const Node& b : nodes)
        if (a.size() > b.size() && is_prefix(b, a)) CHECK(kb.less(a, b));
    CHECK(longest_descending_chain(kb).size() == oracle::longest_chain_dp(kb));
  }
}

TEST_CASE("check_strict_total catches broken orders") {
  LinearOrder<Natural> bad({0, 1, 2}, [](Natural a, Natural b) { return a <= b; });
  auto v = check_strict_total(bad);
  REQUIRE(v);
  CHECK(v->law == "irreflexive");
  LinearOrder<Natural> partial({0, 1, 2}, [](Natural a, Natural b) { return a == 0 && b == 1; });
  CHECK(check_strict_total(partial)->law == "total");
}

TEST_CASE("omega_multiple") {
  auto one = naturals(1);
  auto w = omega_multiple(one, 6);
  CHECK(w.size() == 6);
  auto s = w.sorted();
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i].first == i);  // type omega prefix
  auto l = naturals(4);
  auto lw = omega_multiple(l, 3);
  CHECK(lw.less({0, 3}, {1, 0}));
  CHECK(lw.size() == 12);
  CHECK_FALSE(check_strict_total(lw));
  CHECK(oracle::longest_chain_dp(lw) == 12);
}

TEST_CASE("i_transform") {
  // Genuinely empty tree: empty order.
  CHECK(i_transform(TreeSpec::empty(), std::nullopt, 3, 8, 4).size() == 0);
  // Root-only tree: omega copies of the one-element order.
  auto root = make({{}}).as_spec();
  auto out = i_transform(root, std::nullopt, 3, 8, 5);
  CHECK(out.size() == 5);
  CHECK_FALSE(check_strict_total(out));
  // Finite tree: chains equal the brute-force maximum.
  auto finite = make({{}, {0}, {0, 1}, {1}}).as_spec();
  auto fo = i_transform(finite, std::nullopt, 2, 10, 2);
  CHECK_FALSE(check_strict_total(fo));
  CHECK(longest_descending_chain(fo).size() == oracle::longest_chain_dp(fo));
  // All-zeros path: a descending chain of length >= d inside one copy.
  for (std::size_t d : {3u, 6u}) {
    auto zo = i_transform(zero_path_tree(), std::nullopt, d, 1, 1);
    std::vector<std::pair<Natural, Node>> chain;
    for (std::size_t k = 0; k <= d; ++k) chain.emplace_back(0, Node(k, 0));
    for (std::size_t k = 0; k + 1 < chain.size(); ++k) CHECK(zo.less(chain[k + 1], chain[k]));
    CHECK(zo.size() >= d);
  }
  // Override replaces T4.
  auto overridden = i_transform(TreeSpec::full(), make({{}, {3}}).as_spec(), 4, 5, 2);
  CHECK(overridden.size() == 4);
}

TEST_CASE("descending_sequence_tree") {
  auto one = descending_sequence_tree(naturals(1));
  CHECK(truncate(one, 5, 5) == make({{}, {0}}));
  auto three = truncate(descending_sequence_tree(naturals(3)), 5, 5);
  CHECK(three.contains({2, 1, 0}));
  CHECK(three.height() == 3);
  // 1 + 3 + 3 + 1 descending sequences
  CHECK(three.size() == 8);
  for (Natural k = 1; k <= 6; ++k) {
    auto t = truncate(descending_sequence_tree(naturals(k)), k + 2, k);
    CHECK(finite_tree_rank(t) == k);
  }
  // KB order of a finite tree: descending tree rank = its size.
  auto kb = kleene_brouwer(make({{}, {0}, {1}, {0, 0}}));
  CHECK(finite_tree_rank(truncate(descending_sequence_tree(kb), 6, 4)) == 4);
}

TEST_CASE("interval_algebra") {
  auto a1 = interval_algebra(naturals(1), 1);
  CHECK(a1.atoms.size() == 1);
  CHECK(a1.size() == 2);
  auto a3 = interval_algebra(naturals(3), 3);
  CHECK(a3.atoms.size() == 3);
  // atoms partition the sample
  FiniteSet covered;
  std::size_t total = 0;
  for (const auto& atom : a3.atoms) {
    total += atom.size();
    covered.insert(atom.begin(), atom.end());
  }
  CHECK(total == 3);
  CHECK(covered == FiniteSet{0, 1, 2});
  CHECK_THROWS_AS(interval_algebra(naturals(2), 3), Error);
}
