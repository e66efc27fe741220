#include <doctest.h>

#include <thread>

#include "cew/enumerator.hpp"

using namespace cew;

TEST_CASE("enumerate_upto: table prefixes") {
  auto empty = Enumerator::from_table("empty", {});
  CHECK(empty.enumerate_upto(100).empty());

  auto t = Enumerator::from_table("t", {{1, {2}}, {3, {5}}});
  CHECK(t.enumerate_upto(2) == FiniteSet{2});
  CHECK(t.enumerate_upto(10) == FiniteSet{2, 5});
  CHECK(t.entry_stage(5, 10) == Stage{3});
  CHECK_FALSE(t.contains(5, 2));
}

TEST_CASE("enumerate_upto: guard enumerators are monotone and deterministic") {
  auto evens = Enumerator::from_guard("evens", parse_predicate("G(n,s) := n mod 2 = 0"));
  CHECK(evens.enumerate_upto(7) == FiniteSet{0, 2, 4, 6});
  auto late = Enumerator::from_guard("late", parse_predicate("G(n,s) := s >= 2 * n + 3"));
  // n enters at stage 2n+3.
  CHECK(late.entry_stage(4, 20) == Stage{11});
  CHECK(late.enumerate_upto(10) == FiniteSet{0, 1, 2, 3});
  FiniteSet prev;
  for (Stage s = 0; s < 60; ++s) {
    FiniteSet cur = late.enumerate_upto(s);
    CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
    CHECK(cur == late.enumerate_upto(s));
    prev = std::move(cur);
  }
}

TEST_CASE("enumerator: concurrent readers see one history") {
  auto e = Enumerator::from_guard("sq", parse_predicate("G(n,s) := exists y < s. y * y = n"));
  std::vector<FiniteSet> seen(4);
  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i) {
    threads.emplace_back([&, i] {
      for (Stage s = 0; s < 200; s += 1 + i) e.enumerate_upto(s);
      seen[i] = e.enumerate_upto(200);
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& s : seen) CHECK(s == seen[0]);
}

TEST_CASE("enumerator JSON") {
  auto j = nlohmann::json::parse(R"({"id": "w", "stages": {"1": [2], "3": [5, 7]}})");
  auto e = enumerator_from_json(j);
  CHECK(e.id() == "w");
  CHECK(e.enumerate_upto(3) == FiniteSet{2, 5, 7});
  CHECK(enumerator_from_json(e.to_json()).enumerate_upto(9) == e.enumerate_upto(9));
  CHECK_THROWS_AS(enumerator_from_json(nlohmann::json::parse(R"({"id": "w", "stages": {"x": [1]}})")), Error);
  CHECK_THROWS_AS(enumerator_from_json(nlohmann::json::parse(R"({"stages": {}})")), Error);
}

TEST_CASE("snapshot_algebra") {
  auto r = snapshot_algebra({1, 2}, {2, 3});
  CHECK(r.symmetric_difference == FiniteSet{1, 3});
  auto z = snapshot_algebra({}, {});
  CHECK(z.set_union.empty());
  CHECK(z.symmetric_difference.empty());
  FiniteSet a, b, expected;
  for (Natural i = 1; i <= 10; ++i) a.insert(i);
  for (Natural i = 6; i <= 15; ++i) b.insert(i);
  for (Natural x : a)
    if (!b.contains(x)) expected.insert(x);  // brute force
  CHECK(snapshot_algebra(a, b).a_minus_b == expected);
  CHECK(expected == FiniteSet{1, 2, 3, 4, 5});
}
