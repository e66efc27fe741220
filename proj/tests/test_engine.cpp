#include <doctest.h>

#include <sstream>

#include "cew/engine.hpp"

using namespace cew;

namespace {

Enumerator guard(const std::string& text) {
  return Enumerator::from_guard("W", parse_predicate(text));
}

RunConfig single_tree(Stage stages) {
  RunConfig c;
  c.trees = {FiniteTree(std::set<Node>{{}, {0}})};
  c.w = {guard("W(n,s) := 0 = 0")};
  c.stages = stages;
  c.max_depth = 3;
  return c;
}

std::string trace_of(const RunConfig& c) {
  std::ostringstream out;
  Engine e(c);
  e.run(out);
  return out.str();
}

// The definition, read directly: least e with some later element of strictly
// higher e-state; among those, the least index of greatest state.
std::optional<std::pair<std::size_t, std::size_t>> maximal_pull_by_definition(
    const std::vector<Natural>& a, const std::vector<std::vector<bool>>& in, std::size_t cap) {
  auto state = [&](std::size_t idx, std::size_t e) {
    std::vector<bool> s;
    for (std::size_t j = 0; j <= e; ++j) s.push_back(j < in.size() && in[j][a[idx]]);
    return s;
  };
  for (std::size_t e = 0; e < cap && e + 1 < a.size(); ++e) {
    std::optional<std::size_t> best;
    for (std::size_t i = e + 1; i < a.size(); ++i) {
      if (!(state(e, e) < state(i, e))) continue;
      if (!best || state(*best, e) < state(i, e)) best = i;
    }
    if (best) return std::make_pair(e, *best);
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("listing: first entries") {
  Listing l;
  CHECK(l.at(1) == ListEntry{Node{}, 0});
  CHECK(l.at(2) == ListEntry{Node{0}, 0});
  CHECK(l.at(3) == ListEntry{Node{}, 1});
  CHECK(l.at(4) == ListEntry{Node{0, 0}, 0});
  CHECK(l.at(5) == ListEntry{Node{1}, 0});
  CHECK(l.at(6) == ListEntry{Node{0}, 1});
  CHECK(l.at(7) == ListEntry{Node{}, 2});
  CHECK_THROWS_AS(l.at(0), Error);
}

TEST_CASE("listing: injective with the prefix property on 10^4 indices") {
  Listing l;
  std::set<ListEntry> seen;
  for (std::size_t n = 1; n <= 10000; ++n) {
    const auto [chi, k] = l.at(n);
    REQUIRE(seen.insert({chi, k}).second);
    REQUIRE(l.index_of(chi, k) == n);
    if (!chi.empty()) REQUIRE(l.index_of(Node(chi.begin(), chi.end() - 1), k) < n);
    if (k > 0) REQUIRE(l.index_of(chi, k - 1) < n);
  }
}

TEST_CASE("least_filled") {
  CHECK(least_filled({0, 0, 0}) == 0);
  CHECK(least_filled({1, 0, 0}) == 1);
  CHECK(least_filled({1, 1, 1}) == 0);
  CHECK(least_filled({0, 2, 1}, 1) == 2);
  std::vector<std::size_t> counts(5, 0);
  std::set<std::size_t> first;
  for (int r = 0; r < 5; ++r) {
    const std::size_t p = least_filled(counts);
    first.insert(p);
    ++counts[p];
  }
  CHECK(first.size() == 5);
}

TEST_CASE("split_targets respect the listing order") {
  Listing l;
  const FiniteTree t(std::set<Node>{{}, {0}, {1}, {0, 0}, {1, 0}});
  for (std::size_t len = 1; len <= 40; ++len) {
    Node alpha(len, 0);
    const auto addr = coded_address(l, {t}, alpha, 0);
    const auto [chi, i] = l.at(len);
    CHECK(addr.has_value() == t.contains(chi));
    if (!addr) continue;
    const auto parts = split_targets(l, t, alpha, 0);
    CHECK(parts.size() >= i + 3);
    REQUIRE(parts[0]);
    CHECK(parts[0]->size() == l.index_of(chi, 0));
    std::size_t eligible = 0;
    for (Natural c = 0; c <= i; ++c) {
      Node child = chi;
      child.push_back(c);
      if (t.contains(child) && l.index_of(child, 0) < len) ++eligible;
    }
    std::size_t d_parts = 0;
    for (const auto& p : parts) d_parts += p.has_value();
    CHECK(d_parts == 1 + eligible);
  }
}

TEST_CASE("coded_address needs |alpha| > k") {
  Listing l;
  const std::vector<FiniteTree> ts{FiniteTree(std::set<Node>{{}}), FiniteTree(std::set<Node>{{}})};
  CHECK_FALSE(coded_address(l, ts, Node{}, 0));
  CHECK(coded_address(l, ts, Node{0}, 0));
  CHECK_FALSE(coded_address(l, ts, Node{0}, 1));
  CHECK(coded_address(l, ts, Node{0, 0}, 1));
  CHECK_FALSE(coded_address(l, ts, Node{0, 0}, 0));  // l(2) = (<0>, 0), not in {lambda}
  CHECK_FALSE(coded_address(l, ts, Node{0, 0}, 2));
}

TEST_CASE("estate_of") {
  auto in = [](std::size_t j, Natural x) { return j == 0 ? x % 2 == 0 : x % 2 == 1; };
  const FiniteSet r{1, 3, 5};
  CHECK(estate_of(r, {}, in, 2, 0, {}, 10) == 1);
  CHECK(estate_of(r, {}, in, 2, 1, {}, 3) == 2);
  CHECK(estate_of(r, {}, in, 2, 1, {}, 4) == 1);
  CHECK(estate_of(r, {}, in, 2, 0, {{0, 1}}, 10) == 4);
  CHECK(estate_of({}, {2, 3}, in, 2, 0, {{0, 1}}, 10) == 3);
  CHECK(estate_of(r, {}, in, 2, 5, {}, 10) == 1);
  auto partial = [](std::size_t j, Natural x) { return j == 0 && x < 3; };
  CHECK(estate_of(r, {}, partial, 2, 0, {{0, 1}}, 1) == 2);
}

TEST_CASE("ekl_select") {
  SUBCASE("all equal: least index everywhere") {
    auto sel = ekl_select({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}});
    CHECK(sel.selected == std::vector<std::size_t>{0, 0, 0});
    CHECK(sel.skipped == std::vector<std::size_t>{1, 2});
  }
  SUBCASE("one dominant") {
    auto sel = ekl_select({{1, 2, 0}, {2, 0, 0}, {1, 1, 1}});
    CHECK(sel.selected == std::vector<std::size_t>{1, 1, 1});
    CHECK(sel.skipped == std::vector<std::size_t>{0, 2});
  }
  SUBCASE("selection changes with the prefix") {
    auto sel = ekl_select({{2, 0}, {2, 4}});
    CHECK(sel.selected == std::vector<std::size_t>{0, 1});
    CHECK(sel.skipped.empty());
  }
  CHECK(ekl_select({}).selected.empty());
}

TEST_CASE("maximal_pull_step against the definition") {
  // Four sets over 0..15 given by bit masks of x.
  std::vector<std::vector<bool>> in(4, std::vector<bool>(16));
  for (Natural x = 0; x < 16; ++x)
    for (std::size_t j = 0; j < 4; ++j) in[j][x] = (x >> j) & 1;
  auto key = [&](Natural x) {
    std::uint32_t k = 0;
    for (std::size_t j = 0; j < 4; ++j)
      if (in[j][x]) k |= 1u << (31 - j);
    return k;
  };
  std::size_t checked = 0;
  for (std::uint32_t mask = 0; mask < (1u << 12); mask += 7) {
    std::vector<Natural> a;
    for (Natural x = 0; x < 12; ++x)
      if ((mask >> x) & 1) a.push_back(x);
    for (std::size_t cap : {1u, 3u, 8u}) {
      CHECK(maximal_pull_step(a, key, cap) == maximal_pull_by_definition(a, in, cap));
      ++checked;
    }
  }
  CHECK(checked > 1000);
  CHECK_FALSE(maximal_pull_step({5}, key, 8));
}

TEST_CASE("store keys round-trip") {
  const std::string k = store_key('R', 1, Node{0, 2});
  CHECK(k == "R@1/<0,2>");
  char set = 0;
  std::size_t tree = 9;
  Node node;
  REQUIRE(parse_store_key(k, set, tree, node));
  CHECK(set == 'R');
  CHECK(tree == 1);
  CHECK(node == Node{0, 2});
  CHECK(parse_node("<>") == Node{});
  CHECK_FALSE(parse_store_key("R1/<0>", set, tree, node));
  CHECK_FALSE(parse_store_key("R@1/0", set, tree, node));
}

TEST_CASE("config: JSON round trip and validation") {
  const RunConfig c = default_run_config(50);
  const RunConfig back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.run_id() == c.run_id());
  CHECK(c.run_id().size() == 16);
  RunConfig other = c;
  other.stages = 51;
  CHECK(other.run_id() != c.run_id());

  RunConfig bad = c;
  bad.trees.clear();
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.marker_cap = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.split_witnesses = {{0, 9}};
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(RunConfig::from_json({{"trees", {{{"nodes", nlohmann::json::array()}}}}, {"mode", "fast"}}), Error);
}

TEST_CASE("hemimaximal: split tables are checked on load") {
  RunConfig c = default_hemimaximal_config(40);
  CHECK_NOTHROW(c.validate());
  c.hemi_hb = guard("Hb(n,s) := n mod 4 = 2 or n = 4");
  CHECK_THROWS_AS(c.validate(), Error);
  c.hemi_hb = guard("Hb(n,s) := n mod 8 = 2");
  CHECK_THROWS_AS(c.validate(), Error);
  c.hemi_hb.reset();
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("engine: zero stages gives the header only") {
  const std::string t = trace_of(single_tree(0));
  CHECK(std::count(t.begin(), t.end(), '\n') == 1);
  const auto h = nlohmann::json::parse(t.substr(0, t.find('\n')));
  CHECK(h["kind"] == "header");
  CHECK(h["version"] == 1);
  CHECK(h["run_id"] == single_tree(0).run_id());
}

TEST_CASE("engine: deterministic traces") {
  const RunConfig c = default_run_config(300);
  CHECK(trace_of(c) == trace_of(c));
  const RunConfig h = default_hemimaximal_config(300);
  CHECK(trace_of(h) == trace_of(h));
}

TEST_CASE("engine: pull three") {
  Engine e(single_tree(10));
  // Balls 0 and 1 are not enough.
  CHECK(e.step()["pulls"].empty());
  CHECK(e.step()["pulls"].empty());
  CHECK(e.position(0, 0) == Node{});
  const auto r = e.step();
  REQUIRE(r["f"][0] == 0);
  REQUIRE(r["pulls"].size() == 1);
  const auto& p = r["pulls"][0];
  CHECK(p["from"] == Node{});
  CHECK(p["to"] == Node{0});
  CHECK(p["xs"] == std::vector<Natural>{0, 1, 2});
  CHECK(e.store('E', 0, Node{0}) == FiniteSet{0});
  CHECK(e.store('R', 0, Node{0}) == FiniteSet{1});
  CHECK(e.is_allowed(0, 2, Node{0}));
  CHECK_FALSE(e.is_allowed(0, 1, Node{0}));
  for (Natural x : {0, 1, 2}) CHECK(e.position(0, x) == Node{0});
  // <0> codes (lambda, 0): its M parts go to D at lambda or H.
  CHECK(r["enumerations"].contains("R@0/<0>"));
  CHECK(r["enumerations"].contains("E@0/<0>"));
}

TEST_CASE("engine: balls never rest left of the approximation") {
  Engine e(default_run_config(400));
  for (Stage s = 1; s <= 400; ++s) {
    e.step();
    const Node& f = e.approximation();
    for (Natural x = 0; x < s; ++x) {
      for (std::size_t k = 0; k < 2; ++k) {
        const auto pos = e.position(k, x);
        REQUIRE(pos);
        REQUIRE_FALSE(left_of(f, *pos));
      }
    }
  }
}

TEST_CASE("engine: destroy dumps are applied to both trees in the same stage") {
  Engine e(default_run_config(3000));
  std::size_t real = 0;
  for (Stage s = 1; s <= 3000; ++s) {
    const auto r = e.step();
    std::set<std::tuple<Node, Natural, Natural, Natural>> hit[2];
    for (const auto& d : r["dumps"]) {
      if (d["kind"] != "destroy") continue;
      hit[d["k"].get<std::size_t>()].insert({d["by"].get<Node>(), d["n"], d["i"], d["p"]});
      if (d["elem"].is_null()) continue;
      ++real;
      CHECK(e.store('M', d["k"], d["addr"].get<Node>()).contains(d["elem"].get<Natural>()));
    }
    REQUIRE(hit[0] == hit[1]);
  }
  CHECK(real > 0);
}
