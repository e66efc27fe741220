#include "cew/audit.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace cew {

// ---------------------------------------------------------------- trace io

Trace parse_trace(std::istream& in) {
  Trace t;
  std::string line;
  std::size_t number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error("trace line " + std::to_string(number) + ": " + e.what());
    }
    if (!have_header) {
      if (!j.is_object() || j.value("kind", "") != "header" || !j.contains("config") || !j.contains("run_id")) {
        throw Error("trace line " + std::to_string(number) + ": expected header record");
      }
      t.header = j;
      t.config = RunConfig::from_json(j["config"]);
      have_header = true;
      continue;
    }
    if (!j.is_object() || !j.contains("s") || j["s"] != t.stages.size() + 1) {
      throw Error("trace line " + std::to_string(number) + ": expected stage " + std::to_string(t.stages.size() + 1));
    }
    t.stages.push_back(std::move(j));
  }
  if (!have_header) throw Error("trace: empty input");
  return t;
}

Trace parse_trace_text(const std::string& text) {
  std::istringstream in(text);
  return parse_trace(in);
}

std::string serialize_trace(const Trace& trace) {
  std::string out = trace.header.dump() + '\n';
  for (const auto& s : trace.stages) out += s.dump() + '\n';
  return out;
}

std::string trace_digest(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------- report

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::NotApplicable: return "not-applicable";
  }
  return "?";
}

nlohmann::json CheckResult::to_json() const {
  nlohmann::json j{{"name", name}, {"status", to_string(status)}, {"detail", detail},
                   {"counts", counts}, {"thresholds", thresholds}};
  if (!witness.is_null()) j["witness"] = witness;
  return j;
}

bool AuditReport::ok() const {
  return std::none_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.status == CheckStatus::Fail; });
}

const CheckResult* AuditReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

nlohmann::json AuditReport::to_json() const {
  nlohmann::json j{{"run_id", run_id}, {"stages", stages}, {"ok", ok()}, {"checks", nlohmann::json::array()}};
  for (const auto& c : checks) j["checks"].push_back(c.to_json());
  return j;
}

namespace {

using Addr = std::pair<std::size_t, Node>;

CheckResult named(std::string name) {
  CheckResult r;
  r.name = std::move(name);
  return r;
}

struct Enumeration {
  char set;
  std::size_t k;
  Node node;
  std::vector<Natural> xs;
};

std::vector<Enumeration> enumerations_of(const nlohmann::json& stage) {
  std::vector<Enumeration> out;
  if (!stage.contains("enumerations")) return out;
  for (const auto& [key, xs] : stage["enumerations"].items()) {
    Enumeration e;
    if (!parse_store_key(key, e.set, e.k, e.node)) throw Error("trace: bad store key '" + key + "'");
    e.xs = xs.get<std::vector<Natural>>();
    out.push_back(std::move(e));
  }
  return out;
}

const nlohmann::json& field(const nlohmann::json& stage, const char* name) {
  static const nlohmann::json kEmpty = nlohmann::json::array();
  auto it = stage.find(name);
  return it == stage.end() ? kEmpty : *it;
}

std::string addr_string(std::size_t k, const Node& node) {
  return std::to_string(k) + ":" + node_to_string(node);
}

CheckResult fail(CheckResult r, Stage s, const std::string& detail, nlohmann::json witness) {
  r.status = CheckStatus::Fail;
  r.detail = detail;
  witness["stage"] = s;
  r.witness = std::move(witness);
  return r;
}

Node prefix_of(const Node& n, std::size_t len) {
  return Node(n.begin(), n.begin() + static_cast<std::ptrdiff_t>(len));
}

bool is_prefix_of(const Node& p, const Node& n) {
  return p.size() <= n.size() && std::equal(p.begin(), p.end(), n.begin());
}

}  // namespace

// ---------------------------------------------------------------- partitions

CheckResult audit_partitions(const Trace& t) {
  CheckResult r = named("partitions");
  if (t.stages.empty()) {
    r.status = CheckStatus::NotApplicable;
    r.detail = "empty trace";
    return r;
  }
  const std::size_t nt = t.config.trees.size();
  std::vector<std::map<Natural, std::string>> d_owner(nt), re_owner(nt);
  std::vector<std::set<Natural>> h(nt);
  std::map<Addr, FiniteSet> rstore;
  std::size_t checked = 0;
  for (const auto& st : t.stages) {
    const Stage s = st["s"];
    const auto ens = enumerations_of(st);
    for (const auto& e : ens) {
      if (e.k >= nt) return fail(r, s, "store of unknown tree", {{"addresses", {store_key(e.set, e.k, e.node)}}});
      const std::string key = store_key(e.set, e.k, e.node);
      if (e.set != 'R' && e.set != 'E') continue;
      for (Natural x : e.xs) {
        auto [it, fresh] = re_owner[e.k].try_emplace(x, key);
        if (!fresh) {
          return fail(r, s, "R/E stores overlap", {{"element", x}, {"addresses", {it->second, key}}});
        }
        if (e.set == 'R') rstore[{e.k, e.node}].insert(x);
        ++checked;
      }
    }
    for (const auto& sp : field(st, "splits")) {
      if (sp["target"] == "H") h[sp["k"].get<std::size_t>()].insert(sp["elem"].get<Natural>());
    }
    for (const auto& e : ens) {
      const std::string key = store_key(e.set, e.k, e.node);
      for (Natural x : e.xs) {
        if (e.set == 'D') {
          auto [it, fresh] = d_owner[e.k].try_emplace(x, key);
          if (!fresh && it->second != key) {
            return fail(r, s, "D stores overlap", {{"element", x}, {"addresses", {it->second, key}}});
          }
          if (!re_owner[e.k].contains(x)) {
            return fail(r, s, "D element outside every R and E store", {{"element", x}, {"addresses", {key}}});
          }
          if (h[e.k].contains(x)) {
            return fail(r, s, "D element also routed to H", {{"element", x}, {"addresses", {key, "H"}}});
          }
        } else if (e.set == 'M') {
          if (!rstore[{e.k, e.node}].contains(x)) {
            return fail(r, s, "M element outside R", {{"element", x}, {"addresses", {key}}});
          }
        }
        ++checked;
      }
    }
    for (std::size_t k = 0; k < nt; ++k) {
      for (Natural x : h[k]) {
        if (d_owner[k].contains(x)) {
          return fail(r, s, "H element also in D", {{"element", x}, {"addresses", {d_owner[k][x], "H"}}});
        }
      }
    }
  }
  r.counts["memberships"] = checked;
  r.detail = "D pairwise disjoint, D inside R+E minus H, R/E disjoint, M inside R";
  return r;
}

// ---------------------------------------------------------------- balls

CheckResult audit_ball_discipline(const Trace& t) {
  CheckResult r = named("ball_discipline");
  if (t.stages.empty()) {
    r.status = CheckStatus::NotApplicable;
    r.detail = "empty trace";
    return r;
  }
  const std::size_t nt = t.config.trees.size();
  struct Ball {
    Node pos;
    std::set<Node> allowed;
    Stage entry = 0;
    bool used = false;
  };
  std::vector<std::map<Natural, Ball>> balls(nt);
  std::vector<std::map<Node, std::set<Natural>>> at(nt);
  std::map<Node, Stage> left_roots;
  auto last_left = [&](const Node& a) {
    Stage best = 0;
    for (std::size_t len = 1; len <= a.size(); ++len) {
      auto it = left_roots.find(prefix_of(a, len));
      if (it != left_roots.end()) best = std::max(best, it->second);
    }
    return best;
  };
  auto move = [&](std::size_t k, Natural x, const Node& to) {
    Ball& b = balls[k][x];
    auto& from = at[k][b.pos];
    from.erase(x);
    if (from.empty()) at[k].erase(b.pos);
    b.pos = to;
    at[k][to].insert(x);
  };
  std::size_t moves = 0, pulls = 0;
  for (const auto& st : t.stages) {
    const Stage s = st["s"];
    const Node f = st["f"].get<Node>();
    for (std::size_t k = 0; k < nt; ++k) {
      Ball& b = balls[k][s - 1];
      b.pos = Node{};
      b.allowed.insert(Node{});
      b.entry = s;
      at[k][Node{}].insert(s - 1);
    }
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (f[i] == 0) {
        Node right = prefix_of(f, i);
        right.push_back(1);
        left_roots[right] = s;
      }
    }
    std::set<std::pair<std::size_t, Natural>> moved;
    for (const auto& mv : field(st, "moves")) {
      const std::size_t k = mv["k"];
      const Node from = mv["from"].get<Node>(), to = mv["to"].get<Node>();
      if (!left_of(f, from)) return fail(r, s, "upward move from a node not right of f", {{"addresses", {addr_string(k, from)}}});
      if (to != meet(f, from)) return fail(r, s, "upward move not to the meet with f", {{"addresses", {addr_string(k, from), addr_string(k, to)}}});
      for (Natural x : mv["xs"].get<std::vector<Natural>>()) {
        if (!balls[k].contains(x) || balls[k][x].pos != from) {
          return fail(r, s, "moved ball was not at the source", {{"element", x}, {"addresses", {addr_string(k, from)}}});
        }
        move(k, x, to);
        moved.insert({k, x});
        ++moves;
      }
    }
    for (const auto& p : field(st, "pulls")) {
      const std::size_t k = p["k"];
      const Node from = p["from"].get<Node>(), to = p["to"].get<Node>();
      const auto xs = p["xs"].get<std::vector<Natural>>();
      if (to.empty() || prefix_of(to, to.size() - 1) != from) {
        return fail(r, s, "pull target is not a child of the source", {{"addresses", {addr_string(k, from), addr_string(k, to)}}});
      }
      if (!is_prefix_of(to, f)) {
        return fail(r, s, "pull target off the approximation", {{"addresses", {addr_string(k, to)}}, {"f", f}});
      }
      if (xs.size() != 3) return fail(r, s, "pull without three balls", {{"addresses", {addr_string(k, to)}}});
      const Stage left = last_left(to);
      for (Natural x : xs) {
        auto it = balls[k].find(x);
        if (it == balls[k].end() || it->second.pos != from) {
          return fail(r, s, "pulled ball was not at the source", {{"element", x}, {"addresses", {addr_string(k, from)}}});
        }
        const Ball& b = it->second;
        if (!b.allowed.contains(from) || b.used) {
          return fail(r, s, "pulled ball was not free at the source", {{"element", x}, {"addresses", {addr_string(k, from)}}});
        }
        if (moved.contains({k, x})) {
          return fail(r, s, "ball moved up and pulled in one stage", {{"element", x}, {"addresses", {addr_string(k, to)}}});
        }
        if (left >= b.entry) {
          return fail(r, s, "pulled ball older than the target's last initialization",
                      {{"element", x}, {"addresses", {addr_string(k, to)}}, {"initialized", left}});
        }
        move(k, x, to);
      }
      balls[k][xs[2]].allowed.insert(to);
      ++pulls;
    }
    for (const auto& e : enumerations_of(st)) {
      if (e.set != 'R' && e.set != 'E') continue;
      for (Natural x : e.xs) {
        auto it = balls[e.k].find(x);
        if (it == balls[e.k].end() || it->second.pos != e.node) {
          return fail(r, s, "R/E element is not a ball at that node", {{"element", x}, {"addresses", {store_key(e.set, e.k, e.node)}}});
        }
        if (it->second.allowed.contains(e.node)) {
          return fail(r, s, "allowed ball entered R/E at that node", {{"element", x}, {"addresses", {store_key(e.set, e.k, e.node)}}});
        }
        it->second.used = true;
      }
    }
    for (std::size_t k = 0; k < nt; ++k) {
      for (const auto& [pos, xs] : at[k]) {
        if (left_of(f, pos)) {
          return fail(r, s, "ball left right of the approximation",
                      {{"element", *xs.begin()}, {"addresses", {addr_string(k, pos)}}, {"f", f}});
        }
      }
    }
  }
  r.counts["up_moves"] = moves;
  r.counts["pulls"] = pulls;
  r.detail = "moves up to the meet, pulls along f, nothing right of f, allowed balls stay out of R/E";
  return r;
}

// ---------------------------------------------------------------- markers

CheckResult audit_marker_monotonicity(const Trace& t) {
  CheckResult r = named("marker_monotonicity");
  std::map<std::tuple<std::size_t, Node, std::size_t>, std::pair<nlohmann::json, std::string>> last;
  std::map<Addr, std::map<std::size_t, nlohmann::json>> current;
  std::size_t records = 0, uninjured = 0;
  for (const auto& st : t.stages) {
    const Stage s = st["s"];
    std::set<Addr> touched;
    for (const auto& m : field(st, "markers")) {
      const std::size_t k = m["k"], e = m["e"];
      const Node addr = m["addr"].get<Node>();
      const std::string state = m["state"].is_null() ? "" : m["state"].get<std::string>();
      auto key = std::make_tuple(k, addr, e);
      auto it = last.find(key);
      if (!m["injured"].get<bool>()) {
        ++uninjured;
        if (it == last.end() || m["elem"].is_null() || it->second.first.is_null()) {
          return fail(r, s, "uninjured marker without a prior settlement", {{"addresses", {addr_string(k, addr)}}, {"e", e}});
        }
        if (state < it->second.second) {
          return fail(r, s, "e-state regression",
                      {{"element", m["elem"]}, {"addresses", {addr_string(k, addr)}}, {"e", e},
                       {"from", it->second.second}, {"to", state}});
        }
      }
      last[key] = {m["elem"], state};
      current[{k, addr}][e] = m["elem"];
      touched.insert({k, addr});
      ++records;
    }
    for (const auto& a : touched) {
      std::optional<Natural> prev;
      bool ended = false;
      for (const auto& [e, elem] : current[a]) {
        if (elem.is_null()) {
          ended = true;
          continue;
        }
        const Natural x = elem;
        if (ended || (prev && *prev >= x)) {
          return fail(r, s, "marked elements out of order", {{"element", x}, {"addresses", {addr_string(a.first, a.second)}}, {"e", e}});
        }
        prev = x;
      }
    }
  }
  if (records == 0) {
    r.status = CheckStatus::NotApplicable;
    r.detail = "no marker records";
    return r;
  }
  r.counts["records"] = records;
  r.counts["uninjured"] = uninjured;
  r.detail = "uninjured e-state strings non-decreasing; marked elements increasing per address";
  return r;
}

// ---------------------------------------------------------------- dumps

CheckResult audit_dump_permanence(const Trace& t) {
  CheckResult r = named("dump_permanence");
  std::map<Addr, FiniteSet> m;
  std::size_t dumped = 0;
  for (const auto& st : t.stages) {
    const Stage s = st["s"];
    for (const auto& e : enumerations_of(st)) {
      if (e.set != 'M') continue;
      for (Natural x : e.xs) {
        if (!m[{e.k, e.node}].insert(x).second) {
          return fail(r, s, "M element entered twice", {{"element", x}, {"addresses", {store_key('M', e.k, e.node)}}});
        }
      }
    }
    for (const auto& d : field(st, "dumps")) {
      const Addr a{d["k"].get<std::size_t>(), d["addr"].get<Node>()};
      std::vector<Natural> xs;
      if (d["kind"] == "pull") xs = d["elems"].get<std::vector<Natural>>();
      if (d["kind"] == "destroy" && !d["elem"].is_null()) xs.push_back(d["elem"]);
      for (Natural x : xs) {
        if (!m[a].contains(x)) {
          return fail(r, s, "dumped element missing from M", {{"element", x}, {"addresses", {store_key('M', a.first, a.second)}}});
        }
        ++dumped;
      }
    }
    for (const auto& mk : field(st, "markers")) {
      if (mk["elem"].is_null()) continue;
      const Addr a{mk["k"].get<std::size_t>(), mk["addr"].get<Node>()};
      if (m[a].contains(mk["elem"].get<Natural>())) {
        return fail(r, s, "marker sits on a dumped element", {{"element", mk["elem"]}, {"addresses", {store_key('M', a.first, a.second)}}});
      }
    }
  }
  if (dumped == 0) {
    r.status = CheckStatus::NotApplicable;
    r.detail = "no dumps";
    return r;
  }
  r.counts["dumped"] = dumped;
  r.detail = "every dumped element stays in M and is never marked again";
  return r;
}

// ---------------------------------------------------------------- homogeneity

namespace {

using DumpKey = std::tuple<Node, Natural, Natural, Natural>;  // by, n, i, p

struct HomogeneityScan {
  std::optional<CheckResult> failure;
  std::vector<std::vector<std::set<DumpKey>>> applied;  // stage -> tree -> set
  std::size_t decisions = 0, destroys = 0;
};

HomogeneityScan scan_homogeneity(const Trace& t, CheckResult r) {
  HomogeneityScan out;
  Listing listing;
  const std::size_t nt = t.config.trees.size();
  for (const auto& st : t.stages) {
    const Stage s = st["s"];
    std::set<std::tuple<std::size_t, Node, DumpKey>> expected, actual;
    for (const auto& d : field(st, "decisions")) {
      const Node by = d["by"].get<Node>();
      const Natural n = d["n"], i = d["i"], p = d["p"];
      ++out.decisions;
      for (std::size_t k = 0; k < nt; ++k) {
        for (std::size_t len = k + 1; len <= by.size(); ++len) {
          const Node gamma = prefix_of(by, len);
          auto addr = coded_address(listing, t.config.trees, gamma, k);
          if (addr && addr->chi.size() == n && addr->i == i) expected.insert({k, gamma, DumpKey{by, n, i, p}});
        }
      }
    }
    std::vector<std::set<DumpKey>> applied(nt);
    for (const auto& d : field(st, "dumps")) {
      if (d["kind"] != "destroy") continue;
      const std::size_t k = d["k"];
      const DumpKey key{d["by"].get<Node>(), d["n"], d["i"], d["p"]};
      actual.insert({k, d["addr"].get<Node>(), key});
      if (k < nt) applied[k].insert(key);
      ++out.destroys;
    }
    for (const auto& e : expected) {
      if (!actual.contains(e)) {
        const auto& [k, gamma, key] = e;
        out.failure = fail(r, s, "dump decision not applied in every tree",
                           {{"addresses", {addr_string(k, gamma)}}, {"by", std::get<0>(key)}, {"n", std::get<1>(key)},
                            {"i", std::get<2>(key)}, {"p", std::get<3>(key)}});
        return out;
      }
    }
    for (const auto& a : actual) {
      if (!expected.contains(a)) {
        const auto& [k, gamma, key] = a;
        out.failure = fail(r, s, "destroy dump without a matching decision",
                           {{"addresses", {addr_string(k, gamma)}}, {"by", std::get<0>(key)}, {"p", std::get<3>(key)}});
        return out;
      }
    }
    out.applied.push_back(std::move(applied));
  }
  return out;
}

}  // namespace

CheckResult audit_homogeneity(const Trace& t) {
  CheckResult r = named("homogeneity");
  if (t.stages.empty()) {
    r.status = CheckStatus::NotApplicable;
    r.detail = "empty trace";
    return r;
  }
  auto scan = scan_homogeneity(t, r);
  if (scan.failure) return *scan.failure;
  r.counts["decisions"] = scan.decisions;
  r.counts["destroys"] = scan.destroys;
  r.detail = t.config.trees.size() < 2 ? "single tree: vacuous"
                                       : "every decision dumped at every eligible address of every tree in its stage";
  return r;
}

CheckResult audit_homogeneity_pair(const Trace& a, const Trace& b) {
  if (a.run_id() != b.run_id()) throw Error("homogeneity: traces come from different runs (" + a.run_id() + " vs " + b.run_id() + ")");
  CheckResult r = named("homogeneity");
  auto sa = scan_homogeneity(a, r);
  if (sa.failure) return *sa.failure;
  auto sb = scan_homogeneity(b, r);
  if (sb.failure) return *sb.failure;
  const std::size_t n = std::min(sa.applied.size(), sb.applied.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (sa.applied[i] != sb.applied[i]) {
      return fail(r, i + 1, "dumped-index sets differ between the traces", nlohmann::json::object());
    }
  }
  r.counts["stages_compared"] = n;
  r.detail = "both traces homogeneous and in agreement";
  return r;
}

// ---------------------------------------------------------------- friedberg

CheckResult audit_friedberg(const Trace& t) {
  CheckResult r = named("friedberg");
  Listing listing;
  const bool hemi = t.config.mode == RunMode::Hemimaximal;
  struct Parts {
    std::vector<std::optional<Node>> targets;
    std::vector<std::size_t> counts;
    std::size_t from = 0;  // first part under rotation
  };
  std::map<std::pair<char, Addr>, Parts> parts;
  std::map<Addr, std::map<Natural, std::size_t>> assigned;
  std::size_t max_spread = 0, splits = 0;
  for (const auto& st : t.stages) {
    const Stage s = st["s"];
    std::map<std::string, std::set<Natural>> enumerated;
    for (const auto& e : enumerations_of(st)) {
      auto& bucket = enumerated[store_key(e.set, e.k, e.node)];
      bucket.insert(e.xs.begin(), e.xs.end());
    }
    std::map<Addr, std::set<Natural>> split_m;
    std::set<std::pair<char, Addr>> touched;
    for (const auto& sp : field(st, "splits")) {
      const char kind = sp["kind"].get<std::string>()[0];
      const std::size_t k = sp["k"];
      const Node node = sp["addr"].get<Node>();
      const Addr a{k, node};
      const Natural x = sp["elem"];
      const std::size_t part = sp["part"];
      auto it = parts.find({kind, a});
      if (it == parts.end()) {
        Parts p;
        if (kind == 'M') {
          p.targets = split_targets(listing, t.config.trees.at(k), node, k);
          auto addr = coded_address(listing, t.config.trees, node, k);
          if (hemi && addr && addr->chi.empty()) p.from = 1;
        } else {
          p.targets = e_targets(listing, t.config.trees.at(k), node, k);
        }
        p.counts.assign(p.targets.size(), 0);
        it = parts.emplace(std::make_pair(kind, a), std::move(p)).first;
      }
      Parts& p = it->second;
      if (part >= p.targets.size()) {
        return fail(r, s, "part index out of range", {{"element", x}, {"addresses", {addr_string(k, node)}}, {"part", part}});
      }
      const std::string want = p.targets[part] ? store_key('D', k, *p.targets[part]) : "H";
      if (sp["target"] != want) {
        return fail(r, s, "split target does not match its part", {{"element", x}, {"addresses", {addr_string(k, node), sp["target"]}}, {"expected", want}});
      }
      if (p.targets[part] && !enumerated[want].contains(x)) {
        return fail(r, s, "split element missing from its D store", {{"element", x}, {"addresses", {want}}});
      }
      if (kind == 'M') {
        if (!assigned[a].emplace(x, part).second) {
          return fail(r, s, "M element assigned twice", {{"element", x}, {"addresses", {addr_string(k, node)}}});
        }
        split_m[a].insert(x);
      }
      ++p.counts[part];
      touched.insert(it->first);
      ++splits;
    }
    for (const auto& e : enumerations_of(st)) {
      if (e.set != 'M') continue;
      for (Natural x : e.xs) {
        if (!split_m[{e.k, e.node}].contains(x)) {
          return fail(r, s, "M element without a part", {{"element", x}, {"addresses", {store_key('M', e.k, e.node)}}});
        }
      }
    }
    for (const auto& key : touched) {
      const Parts& p = parts[key];
      if (p.from + 1 >= p.counts.size()) continue;
      const auto [lo, hi] = std::minmax_element(p.counts.begin() + static_cast<std::ptrdiff_t>(p.from), p.counts.end());
      const std::size_t spread = *hi - *lo;
      max_spread = std::max(max_spread, spread);
      const std::size_t tolerance = p.counts.size() - p.from;
      if (spread > tolerance) {
        return fail(r, s, "part starvation: sibling counts differ by more than the part count",
                    {{"addresses", {std::string(1, key.first) + "@" + addr_string(key.second.first, key.second.second)}},
                     {"counts", p.counts},
                     {"element", nullptr}});
      }
    }
  }
  if (splits == 0) {
    r.detail = "no split events: vacuous";
    return r;
  }
  r.counts["splits"] = splits;
  r.counts["addresses"] = parts.size();
  r.counts["max_spread"] = max_spread;
  r.thresholds["spread"] = "part count";
  r.detail = "every M element in exactly one part; rotated parts within tolerance";
  return r;
}

// ---------------------------------------------------------------- containment

CheckResult audit_requirement_containment(const Trace& t, std::size_t threshold) {
  CheckResult r = named("requirement_containment");
  r.thresholds["finite_difference"] = threshold;
  if (t.stages.empty() || t.config.w.empty()) {
    r.status = CheckStatus::NotApplicable;
    r.detail = t.stages.empty() ? "empty trace" : "no W sets";
    return r;
  }
  const std::size_t nt = t.config.trees.size();
  std::map<std::pair<char, Addr>, FiniteSet> stores;
  for (const auto& st : t.stages) {
    for (const auto& e : enumerations_of(st)) {
      auto& bucket = stores[{e.set, {e.k, e.node}}];
      bucket.insert(e.xs.begin(), e.xs.end());
    }
  }
  const Stage last = t.stages.size();
  const Node f = t.stages.back()["f"].get<Node>();
  auto get = [&](char set, std::size_t k, const Node& n) -> const FiniteSet& {
    static const FiniteSet kEmpty;
    auto it = stores.find({set, {k, n}});
    return it == stores.end() ? kEmpty : it->second;
  };
  auto missing = [&](const FiniteSet& a, const FiniteSet& b) {
    std::size_t c = 0;
    for (Natural x : a) c += !b.contains(x);
    return c;
  };
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t k = 0; k < nt; ++k) {
    for (std::size_t e = 0; e < t.config.w.size(); ++e) {
      FiniteSet w;
      for (Natural x : t.config.w[e].enumerate_upto(last)) {
        if (x < last) w.insert(x);
      }
      nlohmann::json first = {{"1", nullptr}, {"2", nullptr}, {"3_lt", nullptr}, {"3_le", nullptr}};
      FiniteSet rr, d_le, d_lt;
      for (std::size_t i = 1; i <= f.size(); ++i) {
        d_lt = d_le;
        const Node node = prefix_of(f, i);
        for (char set : {'R', 'E'}) rr.insert(get(set, k, node).begin(), get(set, k, node).end());
        d_le.insert(get('D', k, node).begin(), get('D', k, node).end());
        FiniteSet cover = w;
        cover.insert(rr.begin(), rr.end());
        cover.insert(d_le.begin(), d_le.end());
        FiniteSet universe;
        for (Natural x = 0; x < last; ++x) universe.insert(x);
        auto three = [&](const FiniteSet& d) {
          FiniteSet u = rr;
          for (Natural x : d) u.insert(x);
          return missing(w, u) <= threshold;
        };
        if (first["1"].is_null() && missing(universe, cover) <= threshold) first["1"] = i;
        if (first["2"].is_null() && missing(w, rr) <= threshold) first["2"] = i;
        if (first["3_lt"].is_null() && three(d_lt)) first["3_lt"] = i;
        if (first["3_le"].is_null() && three(d_le)) first["3_le"] = i;
      }
      per.push_back({{"k", k}, {"e", e}, {"least_i", first}, {"w_size", w.size()}});
    }
  }
  r.counts["patterns"] = per;
  r.detail = "report only: least i_e satisfying each pattern at the last stage (null: none yet)";
  return r;
}

// ---------------------------------------------------------------- hemimaximal

CheckResult audit_hemimaximal(const Trace& t) {
  CheckResult r = named("hemimaximal");
  if (t.config.mode != RunMode::Hemimaximal) {
    r.status = CheckStatus::NotApplicable;
    r.detail = "standard mode";
    return r;
  }
  Listing listing;
  const Stage bound = t.stages.size();
  auto entries = [&](const Enumerator& e) {
    std::map<Natural, Stage> out;
    for (Natural x : e.enumerate_upto(bound)) out[x] = *e.entry_stage(x, bound);
    return out;
  };
  const auto em = entries(*t.config.hemi_m), eh = entries(*t.config.hemi_h), ehb = entries(*t.config.hemi_hb);
  auto in = [](const std::map<Natural, Stage>& e, Natural x, Stage s) {
    auto it = e.find(x);
    return it != e.end() && it->second <= s;
  };
  struct Hemi {
    std::vector<Natural> order;
    FiniteSet m, dumped;
  };
  std::map<Addr, Hemi> addrs;
  std::size_t events = 0, single_dumps = 0;
  for (const auto& st : t.stages) {
    const Stage s = st["s"];
    std::map<Addr, std::set<Natural>> new_m;
    for (const auto& e : enumerations_of(st)) {
      const Addr a{e.k, e.node};
      auto addr = coded_address(listing, t.config.trees, e.node, e.k);
      if (!addr || !addr->chi.empty()) continue;
      Hemi& h = addrs[a];
      if (e.set == 'R') {
        if (e.xs.size() > 1) return fail(r, s, "two R elements in one stage", {{"addresses", {addr_string(e.k, e.node)}}});
        h.order.insert(h.order.end(), e.xs.begin(), e.xs.end());
      } else if (e.set == 'M') {
        new_m[a].insert(e.xs.begin(), e.xs.end());
      }
    }
    std::map<Addr, std::set<Natural>> explained;
    std::map<Natural, std::size_t> part_of;
    for (const auto& sp : field(st, "splits")) {
      if (sp["kind"] == "M") part_of[sp["elem"].get<Natural>()] = sp["part"];
    }
    for (const auto& ev : field(st, "hemi")) {
      const Addr a{ev["k"].get<std::size_t>(), ev["addr"].get<Node>()};
      Hemi& h = addrs[a];
      const Natural m = ev["m"], x = ev["elem"];
      ++events;
      if (m >= h.order.size() || h.order[m] != x) {
        return fail(r, s, "hemi event does not follow p", {{"element", x}, {"addresses", {addr_string(a.first, a.second)}}, {"m", m}});
      }
      const bool from_h = in(eh, m, s);
      if (!in(em, m, s) || (ev["src"] == "H") != from_h) {
        return fail(r, s, "hemi event source disagrees with the tables", {{"element", x}, {"m", m}, {"addresses", {addr_string(a.first, a.second)}}});
      }
      if (ev.value("already", false)) {
        if (!h.m.contains(x)) return fail(r, s, "'already' element not in M", {{"element", x}, {"addresses", {addr_string(a.first, a.second)}}});
        continue;
      }
      if (!explained[a].insert(x).second) return fail(r, s, "element added twice", {{"element", x}});
      const bool to_lambda = part_of.contains(x) && part_of[x] == 0;
      if (from_h != to_lambda) {
        return fail(r, s, from_h ? "p(H) element not routed to D_lambda" : "p(Hb) element routed to D_lambda",
                    {{"element", x}, {"addresses", {addr_string(a.first, a.second)}}});
      }
    }
    for (const auto& d : field(st, "dumps")) {
      if (d["kind"] != "destroy" || d["elem"].is_null()) continue;
      const Addr a{d["k"].get<std::size_t>(), d["addr"].get<Node>()};
      if (!addrs.contains(a)) continue;
      const Natural x = d["elem"];
      if (!explained[a].insert(x).second) {
        return fail(r, s, "dump did not add a new element", {{"element", x}, {"addresses", {addr_string(a.first, a.second)}}});
      }
      addrs[a].dumped.insert(x);
      ++single_dumps;
    }
    for (auto& [a, h] : addrs) {
      const auto& added = new_m[a];
      if (added != explained[a]) {
        nlohmann::json extra = nlohmann::json::array();
        for (Natural x : added) {
          if (!explained[a].contains(x)) extra.push_back(x);
        }
        return fail(r, s, "M changed by more than p(M) and single dumps",
                    {{"element", extra.empty() ? nlohmann::json(nullptr) : extra[0]}, {"addresses", {addr_string(a.first, a.second)}}});
      }
      h.m.insert(added.begin(), added.end());
      FiniteSet ph, phb;
      for (Natural m = 0; m < h.order.size(); ++m) {
        const bool im = in(em, m, s), ih = in(eh, m, s), ihb = in(ehb, m, s);
        if (im != (ih || ihb) || (ih && ihb)) {
          return fail(r, s, "p(H) + p(Hb) != p(M)", {{"element", h.order[m]}, {"m", m}, {"addresses", {addr_string(a.first, a.second)}}});
        }
        if (im && !h.m.contains(h.order[m])) {
          return fail(r, s, "p(M) element missing from M", {{"element", h.order[m]}, {"m", m}, {"addresses", {addr_string(a.first, a.second)}}});
        }
      }
    }
  }
  if (addrs.empty()) {
    r.status = CheckStatus::NotApplicable;
    r.detail = "no lambda-coded addresses";
    return r;
  }
  r.counts["addresses"] = addrs.size();
  r.counts["mapped"] = events;
  r.counts["single_dumps"] = single_dumps;
  r.detail = "p(H) + p(Hb) = p(M) on the materialized range at every stage; each dump adds one element";
  return r;
}

// ---------------------------------------------------------------- driver

std::vector<std::string> audit_check_names() {
  return {"partitions", "ball_discipline", "marker_monotonicity", "dump_permanence",
          "homogeneity", "friedberg",       "requirement_containment", "hemimaximal"};
}

AuditReport audit_trace(const Trace& t, const std::vector<std::string>& only, unsigned threads) {
  std::vector<std::string> names = only.empty() ? audit_check_names() : only;
  const auto known = audit_check_names();
  for (const auto& n : names) {
    if (std::find(known.begin(), known.end(), n) == known.end()) throw Error("unknown check '" + n + "'");
  }
  if (threads == 0) {
    if (const char* env = std::getenv("CE_WORKBENCH_THREADS")) threads = static_cast<unsigned>(std::atoi(env));
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  }
  AuditReport report;
  report.run_id = t.run_id();
  report.stages = t.stages.size();
  report.checks.resize(names.size());
  auto run = [&](const std::string& n) {
    if (n == "partitions") return audit_partitions(t);
    if (n == "ball_discipline") return audit_ball_discipline(t);
    if (n == "marker_monotonicity") return audit_marker_monotonicity(t);
    if (n == "dump_permanence") return audit_dump_permanence(t);
    if (n == "homogeneity") return audit_homogeneity(t);
    if (n == "friedberg") return audit_friedberg(t);
    if (n == "requirement_containment") return audit_requirement_containment(t, t.config.threshold);
    return audit_hemimaximal(t);
  };
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(names.size());
  auto worker = [&] {
    for (std::size_t i; (i = next++) < names.size();) {
      try {
        report.checks[i] = run(names[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < std::min<std::size_t>(threads, names.size()); ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!errors[i].empty()) throw Error("trace: malformed record (" + names[i] + "): " + errors[i]);
  }
  return report;
}

// ---------------------------------------------------------------- fixtures

std::vector<Fault> all_faults() {
  return {Fault::DOverlap, Fault::HomogeneityDesync, Fault::PartStarvation, Fault::MarkerRegression, Fault::BallRightDrift};
}

std::string fault_name(Fault f) {
  switch (f) {
    case Fault::DOverlap: return "d-overlap";
    case Fault::HomogeneityDesync: return "homogeneity-desync";
    case Fault::PartStarvation: return "part-starvation";
    case Fault::MarkerRegression: return "marker-regression";
    case Fault::BallRightDrift: return "ball-right-drift";
  }
  return "?";
}

Fault fault_from_name(const std::string& name) {
  for (Fault f : all_faults()) {
    if (fault_name(f) == name) return f;
  }
  throw Error("unknown fault '" + name + "'");
}

std::string fault_check(Fault f) {
  switch (f) {
    case Fault::DOverlap: return "partitions";
    case Fault::HomogeneityDesync: return "homogeneity";
    case Fault::PartStarvation: return "friedberg";
    case Fault::MarkerRegression: return "marker_monotonicity";
    case Fault::BallRightDrift: return "ball_discipline";
  }
  return "?";
}

namespace {

Trace clean_trace(RunConfig c) {
  std::ostringstream out;
  Engine e(std::move(c));
  e.run(out);
  return parse_trace_text(out.str());
}

void add_enumeration(nlohmann::json& stage, const std::string& key, Natural x) {
  auto& en = stage["enumerations"];
  std::vector<Natural> xs = en.contains(key) ? en[key].get<std::vector<Natural>>() : std::vector<Natural>{};
  xs.push_back(x);
  std::sort(xs.begin(), xs.end());
  en[key] = xs;
}

void remove_enumeration(nlohmann::json& stage, const std::string& key, Natural x) {
  auto& en = stage["enumerations"];
  if (!en.contains(key)) return;
  auto xs = en[key].get<std::vector<Natural>>();
  xs.erase(std::remove(xs.begin(), xs.end(), x), xs.end());
  if (xs.empty()) {
    en.erase(key);
  } else {
    en[key] = xs;
  }
}

}  // namespace

std::string make_fault_fixture(Fault f, Stage stages) {
  RunConfig c = default_run_config(stages);
  if (f == Fault::HomogeneityDesync) {
    c.homogeneity = false;
    return serialize_trace(clean_trace(c));
  }
  Trace t = clean_trace(c);
  auto none = [&] { return Error("fault fixture " + fault_name(f) + ": no site in a " + std::to_string(stages) + "-stage run"); };
  switch (f) {
    case Fault::DOverlap: {
      // Enumerate a D element into a second D store of the same tree.
      std::optional<std::tuple<std::size_t, Node, Natural>> first;
      for (auto& st : t.stages) {
        for (const auto& e : enumerations_of(st)) {
          if (e.set != 'D') continue;
          if (!first) {
            first = {e.k, e.node, e.xs.front()};
          } else if (std::get<0>(*first) == e.k && std::get<1>(*first) != e.node) {
            add_enumeration(st, store_key('D', e.k, e.node), std::get<2>(*first));
            return serialize_trace(t);
          }
        }
      }
      throw none();
    }
    case Fault::PartStarvation: {
      std::map<std::pair<std::size_t, Node>, std::size_t> count;
      for (const auto& st : t.stages) {
        for (const auto& sp : field(st, "splits")) {
          if (sp["kind"] == "M") ++count[{sp["k"], sp["addr"].get<Node>()}];
        }
      }
      if (count.empty()) throw none();
      const auto target = std::max_element(count.begin(), count.end(),
                                           [](const auto& a, const auto& b) { return a.second < b.second; })->first;
      for (auto& st : t.stages) {
        std::string part0;
        for (auto& sp : st["splits"]) {
          if (sp["kind"] != "M" || sp["k"] != target.first || sp["addr"].get<Node>() != target.second) continue;
          if (sp["part"] == 0) continue;
          Listing listing;
          const auto parts = split_targets(listing, t.config.trees[target.first], target.second, target.first);
          const Natural x = sp["elem"];
          if (sp["target"] != "H") remove_enumeration(st, sp["target"], x);
          const std::string want = parts[0] ? store_key('D', target.first, *parts[0]) : "H";
          if (want != "H") add_enumeration(st, want, x);
          sp["part"] = 0;
          sp["target"] = want;
        }
      }
      return serialize_trace(t);
    }
    case Fault::MarkerRegression: {
      for (auto& st : t.stages) {
        auto& ms = st["markers"];
        for (std::size_t i = 0; i < ms.size(); ++i) {
          if (ms[i]["state"].is_null()) continue;
          std::string state = ms[i]["state"];
          const auto one = state.find('1');
          if (one == std::string::npos) continue;
          state[one] = '0';
          nlohmann::json fake = ms[i];
          fake["state"] = state;
          fake["injured"] = false;
          ms.insert(ms.begin() + static_cast<std::ptrdiff_t>(i + 1), fake);
          return serialize_trace(t);
        }
      }
      throw none();
    }
    case Fault::BallRightDrift: {
      // Leave one ball behind on an upward move.
      for (auto& st : t.stages) {
        auto& mv = st["moves"];
        if (mv.empty()) continue;
        auto xs = mv[0]["xs"].get<std::vector<Natural>>();
        xs.pop_back();
        if (xs.empty()) {
          mv.erase(mv.begin());
        } else {
          mv[0]["xs"] = xs;
        }
        return serialize_trace(t);
      }
      throw none();
    }
    case Fault::HomogeneityDesync: break;
  }
  throw none();
}

}  // namespace cew
