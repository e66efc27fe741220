#include "cew/engine.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <set>

namespace cew {

// ---------------------------------------------------------------- config

void RunConfig::validate() const {
  if (trees.empty()) throw Error("config: at least one tree is required");
  for (std::size_t k = 0; k < trees.size(); ++k) {
    if (trees[k].empty()) throw Error("config: tree " + std::to_string(k) + " is empty");
  }
  if (w.size() > 32) throw Error("config: at most 32 W enumerators");
  if (max_depth == 0) throw Error("config: maxDepth must be positive");
  if (marker_cap == 0 || marker_cap > 32) throw Error("config: markerCap must be in 1..32");
  if (threshold == 0) throw Error("config: threshold must be positive");
  for (const auto& [a, b] : split_witnesses) {
    if (a >= w.size() || b >= w.size() || a == b) {
      throw Error("config: split witness (" + std::to_string(a) + "," + std::to_string(b) + ") out of range");
    }
  }
  if (mode == RunMode::Hemimaximal) {
    if (!hemi_m || !hemi_h || !hemi_hb) throw Error("config: hemimaximal mode needs M, H and Hb tables");
    const FiniteSet m = hemi_m->enumerate_upto(stages);
    const FiniteSet h = hemi_h->enumerate_upto(stages);
    const FiniteSet hb = hemi_hb->enumerate_upto(stages);
    for (Natural x : h) {
      if (hb.contains(x)) throw Error("config: H and Hb share " + std::to_string(x));
    }
    FiniteSet both = h;
    both.insert(hb.begin(), hb.end());
    for (Natural x : both) {
      auto sm = hemi_m->entry_stage(x, stages);
      auto sp = h.contains(x) ? hemi_h->entry_stage(x, stages) : hemi_hb->entry_stage(x, stages);
      if (sm != sp) throw Error("config: M != H + Hb at element " + std::to_string(x));
    }
    if (both != m) throw Error("config: M has elements outside H + Hb");
  }
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["trees"] = nlohmann::json::array();
  for (const auto& t : trees) j["trees"].push_back(t.to_json());
  j["W"] = nlohmann::json::array();
  for (const auto& e : w) j["W"].push_back(e.to_json());
  j["stages"] = stages;
  j["maxDepth"] = max_depth;
  j["markerCap"] = marker_cap;
  j["threshold"] = threshold;
  j["mode"] = mode == RunMode::Standard ? "standard" : "hemimaximal";
  if (hemi_m) j["hemi"] = {{"M", hemi_m->to_json()}, {"H", hemi_h->to_json()}, {"Hb", hemi_hb->to_json()}};
  j["splitWitnesses"] = split_witnesses;
  j["homogeneity"] = homogeneity;
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("config: expected a JSON object");
  RunConfig c;
  try {
    for (const auto& t : j.at("trees")) c.trees.push_back(FiniteTree::from_json(t));
    if (j.contains("W")) {
      for (const auto& e : j["W"]) c.w.push_back(enumerator_from_json(e));
    }
    c.stages = j.value("stages", Stage{0});
    c.max_depth = j.value("maxDepth", std::size_t{5});
    c.marker_cap = j.value("markerCap", std::size_t{8});
    c.threshold = j.value("threshold", std::size_t{10});
    const std::string mode = j.value("mode", std::string("standard"));
    if (mode == "standard") {
      c.mode = RunMode::Standard;
    } else if (mode == "hemimaximal") {
      c.mode = RunMode::Hemimaximal;
    } else {
      throw Error("config: unknown mode '" + mode + "'");
    }
    if (j.contains("hemi")) {
      const auto& h = j["hemi"];
      c.hemi_m = enumerator_from_json(h.at("M"));
      c.hemi_h = enumerator_from_json(h.at("H"));
      c.hemi_hb = enumerator_from_json(h.at("Hb"));
    }
    if (j.contains("splitWitnesses")) {
      c.split_witnesses = j["splitWitnesses"].get<std::vector<std::pair<Natural, Natural>>>();
    }
    c.homogeneity = j.value("homogeneity", true);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string RunConfig::run_id() const {
  const std::string text = to_json().dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

Enumerator guard(const std::string& id, const std::string& text) {
  return Enumerator::from_guard(id, parse_predicate(text));
}

std::vector<FiniteTree> default_trees() {
  return {FiniteTree(std::set<Node>{{}, {0}, {1}, {0, 0}, {1, 0}}),
          FiniteTree(std::set<Node>{{}, {0}, {0, 0}, {0, 1}})};
}

}  // namespace

RunConfig default_run_config(Stage stages) {
  RunConfig c;
  c.trees = default_trees();
  c.w = {guard("W0", "W(n,s) := n mod 2 = 0"),
         guard("W1", "W(n,s) := n mod 3 = 0"),
         guard("W2", "W(n,s) := n mod 5 < 2"),
         guard("W3", "W(n,s) := n mod 7 = 3 and s > 2*n"),
         guard("W4", "W(n,s) := n mod 2 = 1")};
  c.stages = stages;
  c.max_depth = 7;
  c.split_witnesses = {{0, 4}};
  return c;
}

RunConfig default_hemimaximal_config(Stage stages) {
  RunConfig c = default_run_config(stages);
  c.mode = RunMode::Hemimaximal;
  c.hemi_m = guard("M", "M(n,s) := n mod 2 = 0");
  c.hemi_h = guard("H", "H(n,s) := n mod 4 = 0");
  c.hemi_hb = guard("Hb", "Hb(n,s) := n mod 4 = 2");
  return c;
}

// ---------------------------------------------------------------- pure pieces

std::optional<CodedAddress> coded_address(Listing& listing, const std::vector<FiniteTree>& trees,
                                          const Node& alpha, std::size_t k) {
  if (k >= trees.size() || alpha.size() <= k) return std::nullopt;
  const auto& [chi, i] = listing.at(alpha.size() - k);
  if (!trees[k].contains(chi)) return std::nullopt;
  return CodedAddress{chi, i};
}

std::vector<std::optional<Node>> split_targets(Listing& listing, const FiniteTree& tree, const Node& alpha,
                                               std::size_t k) {
  const std::size_t j = alpha.size() - k;
  const auto [chi, i] = listing.at(j);
  auto prefix = [&](std::size_t index) { return Node(alpha.begin(), alpha.begin() + static_cast<std::ptrdiff_t>(index + k)); };
  std::vector<std::optional<Node>> parts{prefix(listing.index_of(chi, 0))};
  for (Natural l = 0; l <= i; ++l) {
    Node child = chi;
    child.push_back(l);
    if (!tree.contains(child)) continue;
    const std::size_t jl = listing.index_of(child, 0);
    if (jl < j) parts.push_back(prefix(jl));
  }
  while (parts.size() < i + 3) parts.push_back(std::nullopt);
  return parts;
}

std::vector<std::optional<Node>> e_targets(Listing& listing, const FiniteTree& tree, const Node& alpha,
                                           std::size_t k) {
  std::vector<std::optional<Node>> parts;
  for (std::size_t len = k + 1; len <= alpha.size(); ++len) {
    const auto& [chi, i] = listing.at(len - k);
    if (i == 0 && tree.contains(chi)) parts.emplace_back(Node(alpha.begin(), alpha.begin() + static_cast<std::ptrdiff_t>(len)));
  }
  parts.push_back(std::nullopt);
  return parts;
}

std::size_t least_filled(const std::vector<std::size_t>& counts, std::size_t from) {
  std::size_t best = from;
  for (std::size_t p = from + 1; p < counts.size(); ++p) {
    if (counts[p] < counts[best]) best = p;
  }
  return best;
}

int estate_of(const FiniteSet& r, const FiniteSet& m, const std::function<bool(std::size_t, Natural)>& in_w,
              std::size_t w_count, std::size_t e,
              const std::vector<std::pair<Natural, Natural>>& witnesses, std::size_t threshold) {
  if (e >= w_count) return 1;
  auto splits = [&](const FiniteSet& target, std::size_t a, std::size_t b) {
    if (target.empty()) return false;
    return std::all_of(target.begin(), target.end(), [&](Natural x) { return in_w(a, x) != in_w(b, x); });
  };
  for (const auto& [a, b] : witnesses) {
    if (a == e && b < w_count && splits(r, a, b)) return 4;
  }
  for (const auto& [a, b] : witnesses) {
    if (a == e && b < w_count && splits(m, a, b)) return 3;
  }
  std::size_t hits = 0;
  for (Natural x : r) hits += in_w(e, x);
  return hits >= threshold ? 2 : 1;
}

EklSelection ekl_select(const std::vector<std::vector<int>>& strings) {
  EklSelection out;
  if (strings.empty()) return out;
  const std::size_t length = strings.front().size();
  std::vector<bool> chosen(strings.size(), false);
  for (std::size_t m = 0; m < length; ++m) {
    const auto end = static_cast<std::ptrdiff_t>(m + 1);
    std::size_t best = 0;
    for (std::size_t c = 1; c < strings.size(); ++c) {
      if (std::lexicographical_compare(strings[best].begin(), strings[best].begin() + end, strings[c].begin(),
                                       strings[c].begin() + end)) {
        best = c;
      }
    }
    out.selected.push_back(best);
    chosen[best] = true;
  }
  for (std::size_t c = 0; c < strings.size(); ++c) {
    if (!chosen[c]) out.skipped.push_back(c);
  }
  return out;
}

std::optional<std::pair<std::size_t, std::size_t>> maximal_pull_step(
    const std::vector<Natural>& complement, const std::function<std::uint32_t(Natural)>& key,
    std::size_t cap) {
  const std::size_t n = complement.size();
  if (n < 2) return std::nullopt;
  std::vector<std::uint32_t> keys(n), suffix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) keys[i] = key(complement[i]);
  for (std::size_t i = n; i-- > 0;) suffix[i] = std::max(suffix[i + 1], keys[i]);
  for (std::size_t e = 0; e < std::min(cap, n - 1); ++e) {
    const unsigned shift = 31 - static_cast<unsigned>(e);
    const std::uint32_t best = suffix[e + 1] >> shift;
    if (best <= (keys[e] >> shift)) continue;
    for (std::size_t i = e + 1; i < n; ++i) {
      if ((keys[i] >> shift) == best) return std::make_pair(e, i);
    }
  }
  return std::nullopt;
}

std::string store_key(char set, std::size_t k, const Node& node) {
  return std::string(1, set) + "@" + std::to_string(k) + "/" + node_to_string(node);
}

Node parse_node(const std::string& text) {
  if (text.size() < 2 || text.front() != '<' || text.back() != '>') throw Error("bad node '" + text + "'");
  Node out;
  std::size_t pos = 1;
  while (pos < text.size() - 1) {
    std::size_t used = 0;
    out.push_back(std::stoull(text.substr(pos), &used));
    pos += used;
    if (text[pos] == ',') ++pos;
  }
  return out;
}

bool parse_store_key(const std::string& key, char& set, std::size_t& k, Node& node) {
  const auto at = key.find('@');
  const auto slash = key.find('/');
  if (at != 1 || slash == std::string::npos || slash < at) return false;
  try {
    set = key[0];
    k = std::stoul(key.substr(at + 1, slash - at - 1));
    node = parse_node(key.substr(slash + 1));
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

nlohmann::json node_json(const Node& node) {
  return nlohmann::json(node);
}

// ---------------------------------------------------------------- engine

namespace {

struct Ball {
  Node pos;
  std::set<Node> allowed;
  Stage entry = 0;
  bool used = false;  // in some R or E store
  Stage moved = 0;    // last stage of an upward move
};

struct Coded {
  CodedAddress address;
  FiniteSet m;
  std::set<Natural> complement;  // R - M
  std::vector<std::optional<Node>> parts;
  std::vector<std::size_t> counts;
  std::map<Natural, std::size_t> part_of;
  std::vector<std::pair<std::optional<Natural>, std::uint32_t>> reported;  // (elem, state) per marker
  bool hemi = false;
  std::vector<Natural> r_order;  // p(m) = r_order[m]
  FiniteSet pending;             // members of M(table) not yet mapped
};

struct Stores {
  FiniteSet r, e, d;
  std::vector<std::optional<Node>> e_parts;
  std::vector<std::size_t> e_counts;
  Stage last_triple = 0;
  std::unique_ptr<Coded> coded;
};

struct TreeState {
  std::map<Natural, Ball> balls;
  std::map<Node, std::set<Natural>> at;
  std::map<Node, std::set<Natural>> free_at;
  std::map<Node, std::vector<Natural>> arrivals;
  std::map<Node, Stores> stores;
};

struct Question {
  std::vector<std::set<Natural>> cand, rejected;
  std::vector<std::array<std::size_t, 3>> cursor;
  std::size_t last_size = 0;
  Stage w_checked = 0;
};

struct Decision {
  std::size_t n;
  Natural i;
  std::size_t p;
  bool operator<(const Decision& o) const { return std::tie(n, i, p) < std::tie(o.n, o.i, o.p); }
};

Node child_of(const Node& n, Natural o) {
  Node c = n;
  c.push_back(o);
  return c;
}

Node prefix_of(const Node& n, std::size_t len) {
  return Node(n.begin(), n.begin() + static_cast<std::ptrdiff_t>(len));
}

std::string state_bits(std::uint32_t key, std::size_t e) {
  std::string s;
  for (std::size_t j = 0; j <= e; ++j) s += (key >> (31 - j)) & 1u ? '1' : '0';
  return s;
}

}  // namespace

struct Engine::Impl {
  RunConfig config;
  std::string run_id;
  Listing listing;
  std::vector<TreeState> trees;
  std::map<Node, Question> questions;
  std::map<Node, std::vector<Decision>> decisions;  // cached at node creation
  std::map<Node, Stage> left_roots;                 // subtree roots right of some f_t
  std::vector<std::uint32_t> wkey;
  Node f;
  Stage s = 0;

  // per-stage scratch
  nlohmann::json moves, pulls, dumps, decision_log, splits, markers, creations, hemi_events;
  std::map<std::string, FiniteSet> enumerations;
  std::map<std::pair<std::size_t, Node>, std::size_t> own_pull;  // (k, addr) -> e
  std::set<std::pair<std::size_t, Node>> injured_addr;

  explicit Impl(RunConfig c) : config(std::move(c)), run_id(config.run_id()), trees(config.trees.size()) {}

  // Index of the W asked about at depth d; w.size() when there is none.
  std::size_t level_set(std::size_t d) const { return config.w.empty() ? 0 : d % config.w.size(); }

  std::uint32_t key(Natural x) const { return x < wkey.size() ? wkey[x] : 0; }
  bool in_w(std::size_t j, Natural x) const { return (key(x) >> (31 - j)) & 1u; }

  void note(char set, std::size_t k, const Node& node, Natural x) {
    enumerations[store_key(set, k, node)].insert(x);
  }

  Stores& stores(std::size_t k, const Node& alpha) {
    auto& t = trees[k];
    auto it = t.stores.find(alpha);
    if (it != t.stores.end()) return it->second;
    Stores& st = t.stores[alpha];
    st.e_parts = e_targets(listing, config.trees[k], alpha, k);
    st.e_counts.assign(st.e_parts.size(), 0);
    if (auto addr = coded_address(listing, config.trees, alpha, k)) {
      st.coded = std::make_unique<Coded>();
      Coded& c = *st.coded;
      c.address = *addr;
      c.parts = split_targets(listing, config.trees[k], alpha, k);
      c.counts.assign(c.parts.size(), 0);
      c.hemi = config.mode == RunMode::Hemimaximal && addr->chi.empty();
      if (c.hemi) c.pending = config.hemi_m->enumerate_upto(s);
    }
    return st;
  }

  bool is_free(std::size_t k, Natural x) const {
    const Ball& b = trees[k].balls.at(x);
    return !b.used && b.allowed.contains(b.pos);
  }

  void set_free(std::size_t k, Natural x, const Node& from, const Node& to) {
    auto& t = trees[k];
    if (auto it = t.free_at.find(from); it != t.free_at.end()) {
      it->second.erase(x);
      if (it->second.empty()) t.free_at.erase(it);
    }
    if (is_free(k, x)) {
      t.free_at[to].insert(x);
      t.arrivals[to].push_back(x);
    }
  }

  void relocate(std::size_t k, Natural x, const Node& to) {
    auto& t = trees[k];
    Ball& b = t.balls.at(x);
    const Node from = b.pos;
    auto it = t.at.find(from);
    it->second.erase(x);
    if (it->second.empty()) t.at.erase(it);
    b.pos = to;
    t.at[to].insert(x);
    set_free(k, x, from, to);
  }

  Stage last_left(const Node& alpha) const {
    Stage best = 0;
    for (std::size_t len = 1; len <= alpha.size(); ++len) {
      auto it = left_roots.find(prefix_of(alpha, len));
      if (it != left_roots.end()) best = std::max(best, it->second);
    }
    return best;
  }

  // ---- W keys

  void update_keys() {
    for (std::size_t j = 0; j < config.w.size(); ++j) {
      for (Natural x : config.w[j].entering_at(s)) {
        if (x >= wkey.size()) wkey.resize(x + 1, 0);
        wkey[x] |= 1u << (31 - j);
      }
    }
  }

  // ---- questions and f_s

  int ask(const Node& gamma) {
    Question& q = questions[gamma];
    const std::size_t nt = trees.size();
    if (q.cand.empty()) {
      q.cand.resize(nt);
      q.rejected.resize(nt);
      q.cursor.assign(nt, {0, 0, 0});
    }
    const std::size_t e = level_set(gamma.size());
    const Node spots[3] = {gamma, child_of(gamma, 0), child_of(gamma, 1)};
    auto waiting = [&](std::size_t k, Natural x) {
      const Ball& b = trees[k].balls.at(x);
      return is_free(k, x) && (b.pos == spots[0] || b.pos == spots[1] || b.pos == spots[2]);
    };
    for (std::size_t k = 0; k < nt; ++k) {
      for (int c = 0; c < 3; ++c) {
        auto it = trees[k].arrivals.find(spots[c]);
        if (it == trees[k].arrivals.end()) continue;
        for (std::size_t& i = q.cursor[k][c]; i < it->second.size(); ++i) {
          const Natural x = it->second[i];
          if (e >= config.w.size() || q.cand[k].contains(x) || !waiting(k, x)) continue;
          if (in_w(e, x)) {
            q.cand[k].insert(x);
            q.rejected[k].erase(x);
          } else {
            q.rejected[k].insert(x);
          }
        }
      }
    }
    if (e < config.w.size()) {
      for (Stage t = q.w_checked + 1; t <= s; ++t) {
        for (Natural y : config.w[e].entering_at(t)) {
          for (std::size_t k = 0; k < nt; ++k) {
            if (q.rejected[k].erase(y) && waiting(k, y)) q.cand[k].insert(y);
          }
        }
      }
    }
    q.w_checked = s;
    std::size_t total = 0;
    for (const auto& c : q.cand) total += c.size();
    const bool grew = total > q.last_size;
    q.last_size = total;
    return grew ? 0 : 1;
  }

  void compute_approximation() {
    f.clear();
    while (f.size() < config.max_depth) f.push_back(static_cast<Natural>(ask(f)));
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (f[i] == 0) left_roots[child_of(prefix_of(f, i), 1)] = s;
    }
  }

  // ---- ball movement

  void inject() {
    const Natural x = s - 1;
    for (std::size_t k = 0; k < trees.size(); ++k) {
      auto& t = trees[k];
      Ball& b = t.balls[x];
      b.pos = Node{};
      b.allowed.insert(Node{});
      b.entry = s;
      t.at[Node{}].insert(x);
      t.free_at[Node{}].insert(x);
      t.arrivals[Node{}].push_back(x);
    }
  }

  void move_up() {
    for (std::size_t k = 0; k < trees.size(); ++k) {
      auto& t = trees[k];
      std::vector<Node> sources;
      for (const auto& [node, xs] : t.at) {
        if (left_of(f, node)) sources.push_back(node);
      }
      for (const Node& from : sources) {
        const Node to = meet(f, from);
        const std::vector<Natural> xs(t.at[from].begin(), t.at[from].end());
        for (Natural x : xs) {
          relocate(k, x, to);
          t.balls.at(x).moved = s;
        }
        moves.push_back({{"kind", "up"}, {"k", k}, {"from", from}, {"to", to}, {"xs", xs}});
      }
    }
  }

  // ---- node actions

  void pull_three(std::size_t k, const Node& alpha) {
    auto& t = trees[k];
    const Node parent = prefix_of(alpha, alpha.size() - 1);
    const std::size_t e = level_set(parent.size());
    const bool yes = alpha.back() == 0;
    if (yes && e >= config.w.size()) return;
    Stores& st = stores(k, alpha);
    auto fit = t.free_at.find(parent);
    if (fit == t.free_at.end()) return;
    const Stage left = last_left(alpha);
    std::vector<Natural> chosen;
    for (auto it = fit->second.lower_bound(st.last_triple); it != fit->second.end() && chosen.size() < 3; ++it) {
      const Natural x = *it;
      const Ball& b = t.balls.at(x);
      if (b.moved == s || b.allowed.contains(alpha)) continue;
      if (left != 0 && left >= b.entry) continue;
      if (yes && !in_w(e, x)) continue;
      chosen.push_back(x);
    }
    if (chosen.size() < 3) return;
    const Natural x1 = chosen[0], x2 = chosen[1], x3 = chosen[2];
    st.last_triple = s;

    // x1: E_alpha, plus one of the D stores on the path or H.
    t.balls.at(x1).used = true;
    relocate(k, x1, alpha);
    st.e.insert(x1);
    note('E', k, alpha, x1);
    const std::size_t part = least_filled(st.e_counts);
    ++st.e_counts[part];
    nlohmann::json split{{"kind", "E"}, {"k", k}, {"addr", alpha}, {"elem", x1}, {"part", part}};
    if (const auto& target = st.e_parts[part]) {
      stores(k, *target).d.insert(x1);
      note('D', k, *target, x1);
      split["target"] = store_key('D', k, *target);
    } else {
      split["target"] = "H";
    }
    splits.push_back(split);

    // x2: R_alpha.
    t.balls.at(x2).used = true;
    relocate(k, x2, alpha);
    add_to_r(k, alpha, x2);

    // x3: alpha-allowed.
    t.balls.at(x3).allowed.insert(alpha);
    relocate(k, x3, alpha);

    pulls.push_back({{"k", k}, {"from", parent}, {"to", alpha}, {"xs", chosen}});

    // Stragglers at alpha go to E_alpha without D enumeration.
    std::vector<Natural> stragglers;
    for (Natural y : t.at[alpha]) {
      const Ball& b = t.balls.at(y);
      if (!b.used && !b.allowed.contains(alpha)) stragglers.push_back(y);
    }
    for (Natural y : stragglers) {
      t.balls.at(y).used = true;
      set_free(k, y, alpha, alpha);
      st.e.insert(y);
      note('E', k, alpha, y);
    }
  }

  void add_to_r(std::size_t k, const Node& alpha, Natural x) {
    Stores& st = stores(k, alpha);
    st.r.insert(x);
    note('R', k, alpha, x);
    if (st.coded) {
      st.coded->complement.insert(x);
      st.coded->r_order.push_back(x);
    }
  }

  // x enters M at (k, alpha) and is assigned a split part.
  void enter_m(std::size_t k, const Node& alpha, Natural x, std::optional<std::size_t> forced_part,
               std::size_t rotate_from) {
    Stores& st = stores(k, alpha);
    Coded& c = *st.coded;
    c.m.insert(x);
    c.complement.erase(x);
    note('M', k, alpha, x);
    const std::size_t part = forced_part ? *forced_part : least_filled(c.counts, rotate_from);
    ++c.counts[part];
    c.part_of[x] = part;
    nlohmann::json split{{"kind", "M"}, {"k", k}, {"addr", alpha}, {"elem", x}, {"part", part}};
    if (const auto& target = c.parts[part]) {
      stores(k, *target).d.insert(x);
      note('D', k, *target, x);
      split["target"] = store_key('D', k, *target);
    } else {
      split["target"] = "H";
    }
    splits.push_back(split);
  }

  void maximal_pull(std::size_t k, const Node& alpha) {
    Coded& c = *stores(k, alpha).coded;
    const std::vector<Natural> comp(c.complement.begin(), c.complement.end());
    auto step = maximal_pull_step(comp, [this](Natural x) { return key(x); }, config.marker_cap);
    if (!step) return;
    const auto [e, i] = *step;
    std::vector<Natural> dumped(comp.begin() + static_cast<std::ptrdiff_t>(e),
                                comp.begin() + static_cast<std::ptrdiff_t>(i));
    for (Natural x : dumped) enter_m(k, alpha, x, std::nullopt, 0);
    own_pull[{k, alpha}] = e;
    dumps.push_back({{"kind", "pull"}, {"k", k}, {"addr", alpha}, {"e", e}, {"elems", dumped}, {"to", comp[i]}});
  }

  void hemi_sync(std::size_t k, const Node& alpha) {
    Coded& c = *stores(k, alpha).coded;
    std::vector<Natural> ready;
    for (Natural m : c.pending) {
      if (m < c.r_order.size()) ready.push_back(m);
    }
    for (Natural m : ready) {
      c.pending.erase(m);
      const Natural x = c.r_order[m];
      const bool from_h = config.hemi_h->contains(m, s);
      nlohmann::json ev{{"k", k}, {"addr", alpha}, {"m", m}, {"elem", x}, {"src", from_h ? "H" : "Hb"}};
      if (c.m.contains(x)) {
        ev["already"] = true;
      } else {
        enter_m(k, alpha, x, from_h ? std::optional<std::size_t>{0} : std::nullopt, 1);
        injured_addr.insert({k, alpha});
      }
      hemi_events.push_back(ev);
    }
  }

  void destroy(std::size_t k, const Node& gamma, const Node& by, const Decision& d) {
    Coded& c = *stores(k, gamma).coded;
    nlohmann::json ev{{"kind", "destroy"}, {"by", by}, {"k", k}, {"addr", gamma}, {"n", d.n}, {"i", d.i}, {"p", d.p}};
    if (d.p < c.complement.size()) {
      const Natural x = *std::next(c.complement.begin(), static_cast<std::ptrdiff_t>(d.p));
      enter_m(k, gamma, x, std::nullopt, c.hemi ? 1 : 0);
      ev["elem"] = x;
      injured_addr.insert({k, gamma});
    } else {
      ev["elem"] = nullptr;
    }
    dumps.push_back(ev);
  }

  // alpha's guess at W_e below beta: its outcome at the first level >= |beta| asking about W_e.
  std::optional<bool> guess(const Node& alpha, const Node& beta, std::size_t e) const {
    if (e >= config.w.size()) return std::nullopt;
    for (std::size_t level = beta.size(); level < alpha.size(); ++level) {
      if (level_set(level) == e) return alpha[level] == 0;
    }
    return std::nullopt;
  }

  int guessed_state(const Node& alpha, const Node& beta, std::size_t e) const {
    const auto g = guess(alpha, beta, e);
    if (!g || !*g) return 1;
    for (const auto& [a, b] : config.split_witnesses) {
      if (a != e) continue;
      const auto gb = guess(alpha, beta, b);
      if (gb && *gb) return 4;
    }
    return 2;
  }

  int state_wrt(const Node& alpha, const Node& beta, std::size_t n, Natural m) {
    const auto [ek, l] = cantor_unpair(m);
    const auto [e, k] = cantor_unpair(ek);
    if (k >= trees.size()) return 0;
    const Natural i_beta = listing.at(beta.size()).second;
    std::vector<Node> matches;
    for (std::size_t len = k + 1; len <= beta.size(); ++len) {
      const auto& [xi, i] = listing.at(len - k);
      if (i == i_beta && xi.size() == n) matches.push_back(prefix_of(beta, len));
    }
    if (l >= matches.size()) return 0;
    return guessed_state(alpha, matches[l], e);
  }

  void create(const Node& alpha) {
    const std::size_t d = alpha.size();
    const std::size_t n = listing.at(d).first.size();
    std::vector<Node> candidates;
    for (std::size_t len = 1; len < d; ++len) {
      if (listing.at(len).first.size() == n) candidates.push_back(prefix_of(alpha, len));
    }
    std::vector<std::vector<int>> strings;
    for (const Node& beta : candidates) {
      std::vector<int> str;
      for (Natural m = 0; m <= d; ++m) str.push_back(state_wrt(alpha, beta, n, m));
      strings.push_back(std::move(str));
    }
    const EklSelection sel = ekl_select(strings);
    std::set<Decision> ds;
    for (std::size_t c : sel.skipped) ds.insert({n, listing.at(candidates[c].size()).second, d});
    decisions[alpha].assign(ds.begin(), ds.end());
    nlohmann::json cs = nlohmann::json::array(), sk = nlohmann::json::array(), se = nlohmann::json::array();
    for (const Node& b : candidates) cs.push_back(b);
    for (std::size_t c : sel.selected) se.push_back(candidates[c]);
    for (std::size_t c : sel.skipped) sk.push_back(candidates[c]);
    creations.push_back({{"node", alpha}, {"candidates", cs}, {"states", strings}, {"selected", se}, {"skipped", sk}});
  }

  void apply_decision(const Node& alpha, const Decision& d) {
    decision_log.push_back({{"by", alpha}, {"n", d.n}, {"i", d.i}, {"p", d.p}});
    const std::size_t nt = config.homogeneity ? trees.size() : 1;
    for (std::size_t k = 0; k < nt; ++k) {
      for (std::size_t len = k + 1; len <= alpha.size(); ++len) {
        const Node gamma = prefix_of(alpha, len);
        auto addr = coded_address(listing, config.trees, gamma, k);
        if (addr && addr->chi.size() == d.n && addr->i == d.i) destroy(k, gamma, alpha, d);
      }
    }
  }

  void visit(const Node& alpha) {
    if (!decisions.contains(alpha)) create(alpha);
    for (std::size_t k = 0; k < trees.size(); ++k) pull_three(k, alpha);
    for (std::size_t k = 0; k < trees.size(); ++k) {
      Stores& st = stores(k, alpha);
      if (!st.coded) continue;
      if (st.coded->hemi) {
        hemi_sync(k, alpha);
      } else {
        maximal_pull(k, alpha);
      }
    }
    for (const Decision& d : decisions[alpha]) apply_decision(alpha, d);
  }

  void report_markers() {
    for (std::size_t k = 0; k < trees.size(); ++k) {
      for (auto& [alpha, st] : trees[k].stores) {
        if (!st.coded) continue;
        Coded& c = *st.coded;
        if (c.reported.empty()) c.reported.assign(config.marker_cap, {std::nullopt, 0});
        const auto own = own_pull.find({k, alpha});
        const bool other = injured_addr.contains({k, alpha});
        auto it = c.complement.begin();
        for (std::size_t e = 0; e < config.marker_cap; ++e) {
          std::optional<Natural> elem;
          std::uint32_t state = 0;
          if (it != c.complement.end()) {
            elem = *it++;
            state = key(*elem) >> (31 - e);
          }
          auto& [prev_elem, prev_state] = c.reported[e];
          if (elem == prev_elem && state == prev_state) continue;
          bool injured = true;
          if (elem && prev_elem && *elem == *prev_elem) {
            injured = false;
          } else if (elem && prev_elem && own != own_pull.end() && own->second == e && !other) {
            injured = false;
          }
          nlohmann::json rec{{"k", k}, {"addr", alpha}, {"e", e}, {"injured", injured}};
          if (elem) {
            rec["elem"] = *elem;
            rec["state"] = state_bits(key(*elem), e);
          } else {
            rec["elem"] = nullptr;
            rec["state"] = nullptr;
          }
          markers.push_back(rec);
          prev_elem = elem;
          prev_state = state;
        }
      }
    }
  }

  nlohmann::json step() {
    ++s;
    moves = pulls = dumps = decision_log = splits = markers = creations = hemi_events = nlohmann::json::array();
    enumerations.clear();
    own_pull.clear();
    injured_addr.clear();

    update_keys();
    if (config.mode == RunMode::Hemimaximal) {
      const auto fresh = config.hemi_m->entering_at(s);
      for (auto& t : trees) {
        for (auto& [alpha, st] : t.stores) {
          if (st.coded && st.coded->hemi) st.coded->pending.insert(fresh.begin(), fresh.end());
        }
      }
    }
    inject();
    compute_approximation();
    move_up();
    for (std::size_t len = 1; len <= f.size(); ++len) visit(prefix_of(f, len));
    if (config.mode == RunMode::Hemimaximal) {
      for (std::size_t k = 0; k < trees.size(); ++k) {
        std::vector<Node> hemi_nodes;
        for (const auto& [alpha, st] : trees[k].stores) {
          if (st.coded && st.coded->hemi) hemi_nodes.push_back(alpha);
        }
        for (const Node& alpha : hemi_nodes) hemi_sync(k, alpha);
      }
    }
    report_markers();

    nlohmann::json en = nlohmann::json::object();
    for (const auto& [key, xs] : enumerations) en[key] = xs;
    return {{"s", s},           {"f", f},           {"moves", moves},   {"pulls", pulls},
            {"dumps", dumps},   {"decisions", decision_log},           {"splits", splits},
            {"markers", markers}, {"creations", creations},          {"hemi", hemi_events},
            {"enumerations", en}};
  }
};

Engine::Engine(RunConfig config) {
  config.validate();
  impl_ = std::make_unique<Impl>(std::move(config));
}

Engine::~Engine() = default;

const RunConfig& Engine::config() const { return impl_->config; }
Stage Engine::stage() const { return impl_->s; }

nlohmann::json Engine::header() const {
  return {{"kind", "header"}, {"version", 1}, {"run_id", impl_->run_id}, {"config", impl_->config.to_json()}};
}

nlohmann::json Engine::step() { return impl_->step(); }

void Engine::run(std::ostream& out) {
  out << header().dump() << '\n';
  while (impl_->s < impl_->config.stages) out << step().dump() << '\n';
}

const Node& Engine::approximation() const { return impl_->f; }

FiniteSet Engine::store(char set, std::size_t k, const Node& node) const {
  if (k >= impl_->trees.size()) return {};
  const auto& st = impl_->trees[k].stores;
  auto it = st.find(node);
  if (it == st.end()) return {};
  switch (set) {
    case 'R': return it->second.r;
    case 'E': return it->second.e;
    case 'D': return it->second.d;
    case 'M': return it->second.coded ? it->second.coded->m : FiniteSet{};
    default: throw Error(std::string("unknown store '") + set + "'");
  }
}

std::optional<Node> Engine::position(std::size_t k, Natural ball) const {
  if (k >= impl_->trees.size()) return std::nullopt;
  const auto& balls = impl_->trees[k].balls;
  auto it = balls.find(ball);
  if (it == balls.end()) return std::nullopt;
  return it->second.pos;
}

bool Engine::is_allowed(std::size_t k, Natural ball, const Node& node) const {
  if (k >= impl_->trees.size()) return false;
  const auto& balls = impl_->trees[k].balls;
  auto it = balls.find(ball);
  return it != balls.end() && it->second.allowed.contains(node);
}

}  // namespace cew
