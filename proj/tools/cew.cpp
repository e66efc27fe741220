// cew: command-line front end for trees, hierarchy reductions, runs and audits.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cew/audit.hpp"
#include "cew/engine.hpp"
#include "cew/hierarchy.hpp"
#include "cew/order.hpp"
#include "cew/tree.hpp"

using namespace cew;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kAuditFail = 1, kUsage = 2, kParse = 3 };

// A missing or unreadable input file.
struct UsageError : Error {
  using Error::Error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

json read_json(const std::string& path) {
  return json::parse(read_file(path));
}

FiniteTree read_tree(const std::string& path) { return FiniteTree::from_json(read_json(path)); }

PredicateSpec read_predicate(const std::string& path) {
  std::string text = read_file(path);
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r' || text.back() == ' ')) text.pop_back();
  try {
    return parse_predicate(text);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + text, e.position());
  }
}

Trace load_trace(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return parse_trace_text(text);
  } catch (const Error& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw UsageError("cannot write '" + out + "'");
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
}

void emit(const std::string& out, const json& j) { emit(out, j.dump(2)); }

FiniteTree depth_cut(const FiniteTree& t, std::size_t depth) {
  std::set<Node> nodes;
  for (const Node& n : t.nodes()) {
    if (n.size() <= depth) nodes.insert(n);
  }
  return FiniteTree(std::move(nodes));
}

TreeSpec family_spec(const std::string& family, Natural n) {
  if (family == "full") return TreeSpec::full();
  if (family == "binary") return TreeSpec::full_over(2);
  if (family == "chain") {
    return {[](const Node& node) { return std::all_of(node.begin(), node.end(), [](Natural x) { return x == 0; }); },
            [](const Node&) { return std::optional<Natural>{1}; }};
  }
  if (family == "star") {
    return {[n](const Node& node) { return node.empty() || (node.size() == 1 && node[0] < n); },
            [n](const Node& node) { return std::optional<Natural>{node.empty() ? n : 0}; }};
  }
  if (family == "pi2") return t_pi2();
  if (family == "pi3") return t_pi3();
  if (family == "sigma3") return t_sigma3();
  if (family == "pin") return t_pin(n);
  if (family == "sigman") return t_sigman(n);
  throw UsageError("unknown family '" + family + "'");
}

json order_json(const LinearOrder<Node>& order) {
  json sorted = json::array();
  for (const Node& n : order.sorted()) sorted.push_back(node_to_string(n));
  json chain = json::array();
  for (const Node& n : longest_descending_chain(order)) chain.push_back(node_to_string(n));
  return {{"size", order.size()}, {"increasing", sorted}, {"descending_chain", chain},
          {"chain_length", chain.size()}};
}

json signature_json(const std::map<Natural, Natural>& sig) {
  json j = json::object();
  for (const auto& [children, count] : sig) j[std::to_string(children)] = count;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cew: trees, hierarchy reductions, priority runs and trace audits"};
  app.require_subcommand(1);
  std::string out;

  // ---- tree
  auto* tree = app.add_subcommand("tree", "finite trees and orders");
  tree->require_subcommand(1);
  std::string in, a_path, b_path, family = "full";
  std::size_t depth = 4;
  Natural width = 4, copies = 2, n = 3;

  auto* build = tree->add_subcommand("build", "truncate a named tree family");
  build->add_option("--family", family, "full|binary|chain|star|pi2|pi3|sigma3|pin|sigman")->required();
  build->add_option("--n", n, "star size or hierarchy level")->check(CLI::PositiveNumber);
  build->add_option("--depth", depth)->check(CLI::PositiveNumber);
  build->add_option("--width", width)->check(CLI::PositiveNumber);
  build->add_option("--out", out);

  auto* kb = tree->add_subcommand("kb", "Kleene-Brouwer order of a tree");
  kb->add_option("--in", in)->required();
  kb->add_option("--depth", depth, "drop nodes longer than this")->check(CLI::PositiveNumber);
  kb->add_option("--out", out);

  auto* itr = tree->add_subcommand("itransform", "linear order I(T) on a truncation");
  itr->add_option("--in", in)->required();
  itr->add_option("--depth", depth)->check(CLI::PositiveNumber);
  itr->add_option("--width", width)->check(CLI::PositiveNumber);
  itr->add_option("--copies", copies)->check(CLI::PositiveNumber);
  itr->add_option("--out", out);

  auto* desc = tree->add_subcommand("desc", "tree of descending sequences of the KB order");
  desc->add_option("--in", in)->required();
  desc->add_option("--depth", depth)->check(CLI::PositiveNumber);
  desc->add_option("--out", out);

  auto* iso = tree->add_subcommand("iso", "isomorphism test");
  iso->add_option("--a", a_path)->required();
  iso->add_option("--b", b_path)->required();

  auto* rank = tree->add_subcommand("rank", "rank of a finite tree");
  rank->add_option("--in", in)->required();

  auto* trunc = tree->add_subcommand("truncate", "truncate a finite tree");
  trunc->add_option("--in", in)->required();
  trunc->add_option("--depth", depth)->check(CLI::PositiveNumber);
  trunc->add_option("--width", width)->check(CLI::PositiveNumber);
  trunc->add_option("--out", out);

  // ---- pin
  auto* pin = app.add_subcommand("pin", "hierarchy tree families and reductions");
  pin->require_subcommand(1);
  std::string level = "pi3", pred_path;
  Natural level_n = 2, rows = 10;
  Stage stages = 50;

  auto* fam = pin->add_subcommand("family", "level-1 child-count signature");
  fam->add_option("--level", level, "pi2|pi3|sigma3|pin|sigman")->required();
  fam->add_option("--n", n, "level for pin/sigman");
  fam->add_option("--width", width)->check(CLI::PositiveNumber);
  std::size_t fam_depth = 0;
  fam->add_option("--depth", fam_depth, "also emit the truncation to this depth");
  fam->add_option("--out", out);

  auto* red = pin->add_subcommand("reduce", "reduce a predicate to a tree");
  red->add_option("--pred", pred_path)->required();
  red->add_option("--n", n)->required();
  red->add_option("--stages", stages)->check(CLI::PositiveNumber);
  red->add_option("--level", level_n, "2, 3 or more")->check(CLI::Range(2, 64));
  red->add_option("--out", out);

  auto* wit = pin->add_subcommand("witness", "run the one-witness marker machine");
  wit->add_option("--pred", pred_path)->required();
  wit->add_option("--stages", stages)->check(CLI::PositiveNumber);
  wit->add_option("--rows", rows)->check(CLI::PositiveNumber);
  std::string rtable_out;
  wit->add_option("--rtable", rtable_out, "write the R table trace here");
  wit->add_option("--out", out);

  // ---- run
  auto* run = app.add_subcommand("run", "run the priority construction and write a trace");
  std::string config_path, mode = "standard";
  std::optional<Stage> run_stages;
  bool print_config = false;
  run->add_option("--config", config_path, "config JSON (default: built-in two-tree config)");
  run->add_option("--stages", run_stages, "override the stage count");
  run->add_option("--mode", mode, "standard|hemimaximal (built-in config only)")->check(CLI::IsMember({"standard", "hemimaximal"}));
  run->add_flag("--print-config", print_config, "print the config and exit");
  run->add_option("--out", out, "trace file (default stdout)");

  // ---- audit
  auto* audit = app.add_subcommand("audit", "audit a trace");
  std::string trace_path, pair_path, fixture;
  std::vector<std::string> checks;
  unsigned threads = 0;
  audit->add_option("--trace", trace_path);
  audit->add_option("--pair", pair_path, "second trace of the same run (homogeneity)");
  audit->add_option("--check", checks, "restrict to named checks");
  audit->add_option("--threads", threads, "worker cap (default CE_WORKBENCH_THREADS)");
  audit->add_option("--make-fixture", fixture, "write a fault fixture trace instead of auditing");
  audit->add_option("--stages", stages, "fixture length");
  audit->add_option("--out", out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (build->parsed()) {
      emit(out, truncate(family_spec(family, n), depth, width).to_json());
    } else if (kb->parsed()) {
      emit(out, order_json(kleene_brouwer(depth_cut(read_tree(in), depth))));
    } else if (itr->parsed()) {
      const auto order = i_transform(read_tree(in).as_spec(), std::nullopt, depth, width, copies);
      json sorted = json::array();
      for (const auto& [i, node] : order.sorted()) sorted.push_back({i, node_to_string(node)});
      emit(out, json{{"size", order.size()}, {"increasing", sorted}});
    } else if (desc->parsed()) {
      const auto order = kleene_brouwer(read_tree(in));
      emit(out, truncate(descending_sequence_tree(order), depth, order.size()).to_json());
    } else if (iso->parsed()) {
      const FiniteTree a = read_tree(a_path), b = read_tree(b_path);
      std::cout << (tree_isomorphic(a, b) ? "true" : "false") << '\n'
                << canonical_form(a) << '\n'
                << canonical_form(b) << '\n';
    } else if (rank->parsed()) {
      const FiniteTree t = read_tree(in);
      if (t.empty()) throw UsageError("rank: empty tree");
      std::cout << finite_tree_rank(t) << '\n';
    } else if (trunc->parsed()) {
      emit(out, truncate(read_tree(in).as_spec(), depth, width).to_json());
    } else if (fam->parsed()) {
      const TreeSpec t = family_spec(level, n);
      json j{{"level", level}, {"width", width}, {"signature", signature_json(height2_signature(t, width))}};
      if (fam_depth > 0) j["tree"] = truncate(t, fam_depth, width).to_json();
      emit(out, j);
    } else if (red->parsed()) {
      const PredicateSpec p = read_predicate(pred_path);
      const TreeSpec t = tnA(level_n, p, n);
      json j{{"level", level_n}, {"n", n}, {"width", stages},
             {"level1_nodes", truncate(t, 1, stages).size() - 1}};
      if (level_n == 2) j["trace"] = reduction_trace(p, n, stages).to_json();
      emit(out, j);
    } else if (wit->parsed()) {
      MarkerMachine m(read_predicate(pred_path), rows);
      bool ok = true;
      std::string detail;
      for (Stage s = 1; s <= stages; ++s) {
        m.step();
        const auto inv = m.check_invariants();
        if (!inv.ok() && ok) {
          ok = false;
          detail = "stage " + std::to_string(s) + ": " + inv.detail;
        }
      }
      const auto w = m.stable_witnesses(rows, stages);
      json dom = json::array(), witnesses = json::object();
      for (const auto& [row, x] : w) {
        dom.push_back(row);
        witnesses[std::to_string(row)] = x;
      }
      if (!rtable_out.empty()) emit(rtable_out, m.rtable_json().dump());
      emit(out, json{{"rows", rows}, {"stages", stages}, {"dom", dom}, {"witness", witnesses},
                     {"invariants_ok", ok}, {"invariant_detail", detail}});
    } else if (run->parsed()) {
      RunConfig c;
      if (!config_path.empty()) {
        c = RunConfig::from_json(read_json(config_path));
      } else {
        c = mode == "hemimaximal" ? default_hemimaximal_config() : default_run_config();
      }
      if (run_stages) c.stages = *run_stages;
      c.validate();
      if (print_config) {
        emit(out, c.to_json());
        return kOk;
      }
      if (out.empty() || out == "-") {
        Engine(c).run(std::cout);
      } else {
        std::ostringstream text;
        Engine(c).run(text);
        emit(out, text.str());
        std::cout << json{{"run_id", c.run_id()}, {"stages", c.stages}, {"digest", trace_digest(text.str())}}.dump()
                  << '\n';
      }
    } else if (audit->parsed()) {
      if (!fixture.empty()) {
        emit(out, make_fault_fixture(fault_from_name(fixture), stages));
        return kOk;
      }
      if (trace_path.empty()) throw UsageError("audit: --trace is required");
      const Trace t = load_trace(trace_path);
      AuditReport rep;
      if (!pair_path.empty()) {
        const Trace other = load_trace(pair_path);
        rep.run_id = t.run_id();
        rep.stages = t.stages.size();
        rep.checks.push_back(audit_homogeneity_pair(t, other));
      } else {
        rep = audit_trace(t, checks, threads);
      }
      json j = rep.to_json();
      j["digest"] = trace_digest(read_file(trace_path));
      emit(out, j);
      return rep.ok() ? kOk : kAuditFail;
    }
  } catch (const ParseError& e) {
    std::cerr << "cew: parse error: " << e.what() << '\n';
    return kParse;
  } catch (const json::exception& e) {
    std::cerr << "cew: parse error: " << e.what() << '\n';
    return kParse;
  } catch (const UsageError& e) {
    std::cerr << "cew: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "cew: " << e.what() << '\n';
    return kUsage;
  }
  return kOk;
}
