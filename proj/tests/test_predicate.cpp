#include <doctest.h>

#include <random>
#include <string>

#include "cew/predicate.hpp"

using namespace cew;

TEST_CASE("parse: definitions carry their parameter lists") {
  auto r = parse_predicate("R(n,x,y) := y >= x");
  CHECK(r.name() == "R");
  CHECK(r.arity() == 3);
  auto s = parse_predicate("S(n,x,y) := x = 2*n");
  CHECK(s.arity() == 3);
}

TEST_CASE("eval: direct examples") {
  auto r = parse_predicate("R(n,x,y) := y >= x");
  CHECK(r({0, 3, 5}));
  auto s = parse_predicate("S(n,x,y) := x = 2*n");
  CHECK(s({4, 8, 0}));
  CHECK_FALSE(s({4, 9, 0}));
}

TEST_CASE("eval: bounded existential agrees with brute force") {
  auto p = parse_predicate("P(n) := exists y < n. y*y = n");
  for (Natural n = 0; n < 200; ++n) {
    bool oracle = false;
    for (Natural y = 0; y < n; ++y) oracle = oracle || y * y == n;
    CHECK(p({n}) == oracle);
  }
  CHECK(p({4}));
  CHECK_FALSE(p({5}));
}

TEST_CASE("eval: precedence and connectives") {
  auto p = parse_predicate("P(a,b) := a + b * 2 = 7 or not a < b and b mod 3 = 0");
  CHECK(p({3, 2}));          // 3 + 4 = 7
  CHECK(p({5, 3}));          // not 5<3 and 3 mod 3 = 0
  CHECK_FALSE(p({1, 2}));
  auto q = parse_predicate("Q(n) := (n + 1) * 2 = 6");
  CHECK(q({2}));
  auto r = parse_predicate("Q(n) := (n = 1 or n = 2) and n != 2");
  CHECK(r({1}));
  CHECK_FALSE(r({2}));
  auto m = parse_predicate("M(x) := x mod 0 = x");
  CHECK(m({7}));
}

TEST_CASE("eval: nested quantifiers and shadowing") {
  auto prime = parse_predicate(
      "Prime(n) := n > 1 and forall a < n. forall b < n. not a * b = n");
  std::vector<Natural> primes;
  for (Natural n = 0; n < 30; ++n)
    if (prime({n})) primes.push_back(n);
  CHECK(primes == std::vector<Natural>{2, 3, 5, 7, 11, 13, 17, 19, 23, 29});
  auto shadow = parse_predicate("P(x) := exists x < 3. x = 2");
  CHECK(shadow({0}));
}

TEST_CASE("errors: syntax errors report a position") {
  try {
    parse_predicate("R(n,x) := x >");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 13);
  }
  CHECK_THROWS_AS(parse_predicate("R(n) := n $ 2"), ParseError);
  CHECK_THROWS_AS(parse_predicate("R(n) n = 2"), ParseError);
  CHECK_THROWS_AS(parse_predicate("R(n,n) := n = 2"), ParseError);
  CHECK_THROWS_AS(parse_predicate("R(n) := exists y < n y = 1"), ParseError);
}

TEST_CASE("errors: unbound variables and arity") {
  CHECK_THROWS_AS(parse_predicate("R(n) := m = 2"), UnboundVariableError);
  CHECK_THROWS_AS(parse_predicate("R(n) := (exists y < 3. y = n) and y = 1"), UnboundVariableError);
  auto r = parse_predicate("R(n,x,y) := y >= x");
  CHECK_THROWS_AS(r({1, 2}), ArityError);
}

namespace {

// Random well-formed predicate text over the given variables.
struct Gen {
  std::mt19937_64 rng;
  int fresh = 0;

  std::string term(std::vector<std::string>& vars, int depth) {
    std::uniform_int_distribution<int> pick(0, depth > 0 ? 4 : 1);
    switch (pick(rng)) {
      case 0: return std::to_string(rng() % 7);
      case 1: return vars[rng() % vars.size()];
      case 2: return "(" + term(vars, depth - 1) + " + " + term(vars, depth - 1) + ")";
      case 3: return term(vars, depth - 1) + " * " + term(vars, depth - 1);
      default: return "(" + term(vars, depth - 1) + ") mod " + std::to_string(rng() % 4);
    }
  }

  std::string formula(std::vector<std::string>& vars, int depth) {
    static const char* rel[] = {"=", "!=", "<", "<=", ">", ">="};
    std::uniform_int_distribution<int> pick(0, depth > 0 ? 5 : 0);
    switch (pick(rng)) {
      case 0: return term(vars, 1) + " " + rel[rng() % 6] + " " + term(vars, 1);
      case 1: return "(" + formula(vars, depth - 1) + " and " + formula(vars, depth - 1) + ")";
      case 2: return "(" + formula(vars, depth - 1) + " or " + formula(vars, depth - 1) + ")";
      case 3: return "not (" + formula(vars, depth - 1) + ")";
      default: {
        std::string v = "v" + std::to_string(fresh++);
        std::string bound = std::to_string(rng() % 5);
        vars.push_back(v);
        std::string body = formula(vars, depth - 1);
        vars.pop_back();
        return std::string(rng() % 2 ? "(forall " : "(exists ") + v + " < " + bound + ". " + body + ")";
      }
    }
  }
};

}  // namespace

TEST_CASE("property: render round-trips through the parser") {
  Gen gen{std::mt19937_64(20261016)};
  std::mt19937_64 args_rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::string> vars{"a", "b", "c"};
    const std::string text = "P(a,b,c) := " + gen.formula(vars, 3);
    const auto p = parse_predicate(text);
    const auto q = parse_predicate(p.render());
    CHECK(q.arity() == 3);
    for (int i = 0; i < 1000; ++i) {
      const Natural a = args_rng() % 9, b = args_rng() % 9, c = args_rng() % 9;
      const bool lhs = p({a, b, c});
      REQUIRE_MESSAGE(lhs == q({a, b, c}), text << "  vs  " << p.render());
      CHECK(lhs == p({a, b, c}));  // purity
    }
  }
}
