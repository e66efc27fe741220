#include "cew/hierarchy.hpp"

#include <algorithm>

namespace cew {

TreeSpec t_pi2() {
  return {[](const Node& n) { return n.size() <= 1; },
          [](const Node& n) { return n.empty() ? std::optional<Natural>{} : std::optional<Natural>{0}; }};
}

namespace {

// Incremental table of least witnesses y for R(n,x,y), shared by the
// expansion-length queries of one (predicate, n).
class ExpansionTable {
 public:
  ExpansionTable(PredicateSpec r, Natural n) : r_(std::move(r)), n_(n) {
    if (r_.arity() != 3) throw ArityError("expansionary reduction needs R(n,x,y)");
  }

  std::optional<Natural> length(Stage s) {
    std::lock_guard lock(mutex_);
    std::optional<Natural> l;
    for (Natural x = 0; x < s; ++x) {
      if (!witness_below(x, s)) break;
      l = x;
    }
    return l;
  }

 private:
  bool witness_below(Natural x, Stage s) {
    if (x >= least_.size()) {
      least_.resize(x + 1);
      searched_.resize(x + 1, 0);
    }
    if (least_[x]) return *least_[x] < s;
    for (Natural y = searched_[x]; y < s; ++y) {
      if (r_({n_, x, y})) {
        least_[x] = y;
        searched_[x] = y + 1;
        return true;
      }
    }
    searched_[x] = std::max<Natural>(searched_[x], s);
    return false;
  }

  PredicateSpec r_;
  Natural n_;
  std::mutex mutex_;
  std::vector<std::optional<Natural>> least_;
  std::vector<Natural> searched_;
};

}  // namespace

std::optional<Natural> expansion_length(const PredicateSpec& r, Natural n, Stage s) {
  return ExpansionTable(r, n).length(s);
}

bool is_expansionary(std::optional<Natural> previous, std::optional<Natural> current) {
  if (!current) return false;
  return !previous || *current > *previous;
}

nlohmann::json ReductionTrace::to_json() const {
  nlohmann::json ls = nlohmann::json::array();
  for (const auto& v : l) ls.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
  return {{"predicate", predicate}, {"n", n}, {"l", ls}, {"expansionary", expansionary}};
}

ReductionTrace ReductionTrace::from_json(const nlohmann::json& j) {
  ReductionTrace t;
  t.predicate = j.value("predicate", "");
  t.n = j.at("n").get<Natural>();
  for (const auto& v : j.at("l")) {
    t.l.push_back(v.is_null() ? std::nullopt : std::optional<Natural>(v.get<Natural>()));
  }
  t.expansionary = j.at("expansionary").get<std::vector<Stage>>();
  return t;
}

ReductionTrace reduction_trace(const PredicateSpec& r, Natural n, Stage stages) {
  ExpansionTable table(r, n);
  ReductionTrace t;
  t.predicate = r.render();
  t.n = n;
  std::optional<Natural> prev;
  for (Stage s = 0; s < stages; ++s) {
    auto cur = table.length(s);
    t.l.push_back(cur);
    if (s > 0 && is_expansionary(prev, cur)) t.expansionary.push_back(s);
    prev = cur;
  }
  return t;
}

TreeSpec t2A(const PredicateSpec& r, Natural n) {
  auto table = std::make_shared<ExpansionTable>(r, n);
  return {[table](const Node& node) {
            if (node.empty()) return true;
            if (node.size() > 1) return false;
            const Stage s = node[0];
            if (s == 0) return false;
            return is_expansionary(table->length(s - 1), table->length(s));
          },
          [](const Node& node) {
            return node.empty() ? std::optional<Natural>{} : std::optional<Natural>{0};
          }};
}

Natural pi3_entry(Natural n, Natural i) { return cantor_pair(n, i) + 1; }

namespace {

TreeSpec height2_family(bool with_reserved) {
  auto children_of = [with_reserved](Natural entry) -> std::optional<Natural> {
    if (entry == kReservedEntry) {
      if (with_reserved) return std::nullopt;  // infinitely many
      return Natural{0};
    }
    return cantor_unpair(entry - 1).first;
  };
  return {[with_reserved, children_of](const Node& node) {
            if (node.empty()) return true;
            if (node.size() > 2) return false;
            if (node[0] == kReservedEntry && !with_reserved) return false;
            if (node.size() == 1) return true;
            auto bound = children_of(node[0]);
            return !bound || node[1] < *bound;
          },
          [children_of](const Node& node) -> std::optional<Natural> {
            if (node.empty()) return std::nullopt;
            if (node.size() == 1) return children_of(node[0]);
            return Natural{0};
          }};
}

}  // namespace

TreeSpec t_pi3() { return height2_family(false); }
TreeSpec t_sigma3() { return height2_family(true); }

namespace {

TreeSpec graft_family(Natural n, bool sigma) {
  if (n < 3) throw Error("t_pin/t_sigman need n >= 3, got " + std::to_string(n));
  if (n == 3) return sigma ? t_sigma3() : t_pi3();
  auto below_sigma = std::make_shared<TreeSpec>(graft_family(n - 1, true));
  auto below_pi = sigma ? std::make_shared<TreeSpec>(graft_family(n - 1, false)) : nullptr;
  auto pick = [below_sigma, below_pi](Natural entry) -> const TreeSpec* {
    if (entry == kReservedEntry) return below_pi.get();
    return below_sigma.get();
  };
  return {[pick](const Node& node) {
            if (node.empty()) return true;
            const TreeSpec* sub = pick(node[0]);
            return sub && sub->contains(Node(node.begin() + 1, node.end()));
          },
          [pick](const Node& node) -> std::optional<Natural> {
            if (node.empty()) return std::nullopt;
            const TreeSpec* sub = pick(node[0]);
            if (!sub) return Natural{0};
            return sub->child_bound(Node(node.begin() + 1, node.end()));
          }};
}

}  // namespace

TreeSpec t_pin(Natural n) { return graft_family(n, false); }
TreeSpec t_sigman(Natural n) { return graft_family(n, true); }

MarkerMachine::MarkerMachine(PredicateSpec s_pred, Natural rows)
    : s_pred_(std::move(s_pred)), rows_(rows), markers_(rows), initialized_(rows, 0),
      first_fail_(rows), checked_(rows) {
  if (s_pred_.arity() != 3) {
    throw ArityError("one-witness machine needs S(n,x,y), got arity " + std::to_string(s_pred_.arity()));
  }
  holders_.emplace_back();  // stage 0: nothing defined
}

Natural MarkerMachine::fresh(Stage s) {
  counter_ = std::max<Natural>(counter_, s);
  return counter_++;
}

void MarkerMachine::step() {
  const Stage s = stage_ + 1;
  std::vector<std::optional<Natural>> holders;
  for (Natural n = 0; n < std::min<Natural>(s, rows_); ++n) {
    auto& row = markers_[n];
    // Materialize x = s-1 and extend the forall-y check to y < s for all x < s.
    while (row.size() < s) {
      const Natural x = row.size();
      row.push_back(initialized_[n] ? fresh(s) : x);
      first_fail_[n].push_back(std::nullopt);
      checked_[n].push_back(0);
    }
    std::optional<Natural> least;
    for (Natural x = 0; x < s; ++x) {
      auto& fail = first_fail_[n][x];
      for (Natural y = checked_[n][x]; !fail && y < s; ++y) {
        if (!s_pred_({n, x, y})) fail = y;
      }
      checked_[n][x] = s;
      if (!fail) {
        least = x;
        break;
      }
    }
    if (!least) {
      holders.push_back(std::nullopt);
      continue;
    }
    initialized_[n] = 1;
    for (Natural x = 0; x < s; ++x) {
      if (x != *least) row[x] = fresh(s);
    }
    holders.push_back(row[*least]);
  }
  holders_.push_back(std::move(holders));
  stage_ = s;
}

void MarkerMachine::run_to(Stage s) {
  while (stage_ < s) step();
}

std::optional<Natural> MarkerMachine::holder(Natural n, Stage s) const {
  if (s > stage_) throw Error("stage " + std::to_string(s) + " not yet computed");
  if (n >= s) return std::nullopt;
  if (n >= rows_) throw Error("row " + std::to_string(n) + " not materialized");
  return holders_[s][n];
}

bool MarkerMachine::R(Natural n, Natural x, Stage s) const {
  if (n >= s || x >= s) return true;
  return holder(n, s) == x;
}

Natural MarkerMachine::marker(Natural n, Natural x) const {
  if (n >= rows_) throw Error("row " + std::to_string(n) + " not materialized");
  if (x < markers_[n].size()) return markers_[n][x];
  return initialized_[n] ? throw Error("marker not yet materialized") : x;
}

MarkerMachine::InvariantStatus MarkerMachine::check_invariants() const {
  InvariantStatus st;
  const Stage s = stage_;
  if (s == 0) return st;
  // Boundary: cells outside the defined square hold.
  for (Natural n = 0; n <= std::min<Natural>(s, rows_); ++n) {
    if (!R(n, s, s) || !R(s, n, s)) {
      st.boundary = false;
      st.detail = "boundary fails at n=" + std::to_string(n);
    }
  }
  for (Natural n = 0; n < std::min<Natural>(s, rows_); ++n) {
    std::size_t count = 0;
    for (Natural x = 0; x < s; ++x) count += R(n, x, s);
    if (count > 1) {
      st.at_most_one = false;
      st.detail = "row " + std::to_string(n) + " has " + std::to_string(count) + " witnesses";
    }
    std::vector<Natural> values = markers_[n];
    std::sort(values.begin(), values.end());
    if (std::adjacent_find(values.begin(), values.end()) != values.end()) {
      st.distinct = false;
      st.detail = "row " + std::to_string(n) + " repeats a marker value";
    }
  }
  return st;
}

std::map<Natural, Natural> MarkerMachine::stable_witnesses(Natural n_bound, Stage upto) const {
  if (upto > stage_) throw Error("stable_witnesses beyond the computed stage");
  std::map<Natural, Natural> out;
  for (Natural n = 0; n < n_bound; ++n) {
    for (Natural a = 0; a < upto; ++a) {
      if (std::max(n, a) >= upto) continue;
      bool stable = true;
      for (Stage t = std::max(n, a) + 1; t <= upto && stable; ++t) stable = R(n, a, t);
      if (stable) {
        out.emplace(n, a);
        break;
      }
    }
  }
  return out;
}

nlohmann::json MarkerMachine::rtable_json() const {
  nlohmann::json stages = nlohmann::json::array();
  for (Stage s = 1; s <= stage_; ++s) {
    nlohmann::json hs = nlohmann::json::array();
    for (const auto& h : holders_[s]) hs.push_back(h ? nlohmann::json(*h) : nlohmann::json(nullptr));
    stages.push_back({{"s", s}, {"holders", hs}});
  }
  return {{"predicate", s_pred_.render()}, {"rows", rows_}, {"stages", stages}};
}

TreeSpec t3A(std::shared_ptr<MarkerMachine> machine, Natural n) {
  if (n >= machine->rows()) throw Error("t3A: machine does not materialize row " + std::to_string(n));
  auto pi3 = std::make_shared<TreeSpec>(t_pi3());
  auto mutex = std::make_shared<std::mutex>();
  // Agreement length of the column R(n,a,.) below stage bound s.
  auto column_length = [machine, mutex, n](Natural a, Stage s) -> std::optional<Natural> {
    std::lock_guard lock(*mutex);
    machine->run_to(s);
    std::optional<Natural> l;
    for (Stage u = 0; u < s; ++u) {
      if (!machine->R(n, a, u)) break;
      l = u;
    }
    return l;
  };
  return {[pi3, column_length](const Node& node) {
            if (node.empty()) return true;
            if (node.size() > 2) return false;
            const Natural e = node[0];
            if (e % 2 == 0) {
              Node rel = node;
              rel[0] = e / 2;
              return pi3->contains(rel);
            }
            if (node.size() == 1) return true;
            const Natural a = e / 2;
            const Stage s = node[1];
            if (s == 0) return false;
            return is_expansionary(column_length(a, s - 1), column_length(a, s));
          },
          [pi3](const Node& node) -> std::optional<Natural> {
            if (node.empty()) return std::nullopt;
            if (node.size() >= 2) return Natural{0};
            if (node[0] % 2 == 0) return pi3->child_bound(Node{node[0] / 2});
            return std::nullopt;
          }};
}

TreeSpec tnA(Natural level, const PredicateSpec& pred, Natural m) {
  if (pred.arity() != 3) throw ArityError("tnA: predicate must have parameters (n,x,y)");
  if (level < 2) throw Error("tnA: level must be >= 2 (malformed normal form)");
  if (level == 2) return t2A(pred, m);
  if (level == 3) return t3A(std::make_shared<MarkerMachine>(pred, m + 1), m);
  struct Cache {
    std::mutex mutex;
    std::map<Natural, std::shared_ptr<TreeSpec>> subtrees;
  };
  auto cache = std::make_shared<Cache>();
  auto sub = [cache, level, pred, m](Natural x) {
    std::lock_guard lock(cache->mutex);
    auto& slot = cache->subtrees[x];
    if (!slot) slot = std::make_shared<TreeSpec>(tnA(level - 1, pred, cantor_pair(m, x)));
    return slot;
  };
  return {[sub](const Node& node) {
            if (node.size() <= 1) return true;
            return sub(node[0])->contains(Node(node.begin() + 1, node.end()));
          },
          [sub](const Node& node) -> std::optional<Natural> {
            if (node.empty()) return std::nullopt;
            return sub(node[0])->child_bound(Node(node.begin() + 1, node.end()));
          }};
}

std::map<Natural, Natural> height2_signature(const TreeSpec& t, Natural width) {
  std::map<Natural, Natural> out;
  const FiniteTree trunc = truncate(t, 2, width);
  if (trunc.empty()) return out;
  for (const Node& level1 : trunc.children(Node{})) ++out[trunc.children(level1).size()];
  return out;
}

std::vector<Natural> growing_level1_nodes(const TreeSpec& t, Natural width) {
  std::vector<Natural> out;
  if (!t.contains(Node{})) return out;
  for (Natural e = 0; e < width; ++e) {
    if (!t.contains(Node{e})) continue;
    auto count = [&](Natural w) {
      Natural c = 0;
      for (Natural j = 0; j < w; ++j) c += t.contains(Node{e, j});
      return c;
    };
    if (count(2 * width) > count(width)) out.push_back(e);
  }
  return out;
}

}  // namespace cew
