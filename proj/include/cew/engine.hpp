#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cew/enumerator.hpp"
#include "cew/listing.hpp"
#include "cew/tree.hpp"

namespace cew {

enum class RunMode { Standard, Hemimaximal };

/// Everything a run depends on. The construction is deterministic, so equal
/// configs give byte-identical traces.
struct RunConfig {
  std::vector<FiniteTree> trees;  // T_0, T_1, ...
  std::vector<Enumerator> w;      // W_0, W_1, ...
  Stage stages = 0;
  std::size_t max_depth = 5;      // depth of the tree of strategies
  std::size_t marker_cap = 8;     // markers Gamma_0 .. Gamma_{cap-1} per address
  std::size_t threshold = 10;     // "infinite" / "=* empty" cut-off
  RunMode mode = RunMode::Standard;
  std::optional<Enumerator> hemi_m, hemi_h, hemi_hb;  // M = H + H-breve
  std::vector<std::pair<Natural, Natural>> split_witnesses;  // (e, e-breve)
  bool homogeneity = true;        // false: destroy dumps hit tree 0 only (fault injection)

  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  /// FNV-1a of the canonical config JSON, as 16 hex digits.
  std::string run_id() const;
};

/// Two small trees, five W tables, 10^4 stages unless overridden.
RunConfig default_run_config(Stage stages = 10000);
/// The default trees with M = evens split as H = 0 mod 4, H-breve = 2 mod 4.
RunConfig default_hemimaximal_config(Stage stages = 2000);

/// (chi, i) = l(|alpha| - k) when tree k codes at alpha (|alpha| > k and chi in T_k).
struct CodedAddress {
  Node chi;
  Natural i = 0;
};
std::optional<CodedAddress> coded_address(Listing& listing, const std::vector<FiniteTree>& trees,
                                          const Node& alpha, std::size_t k);

/// Split-part targets at a coded address: part 0 is D_chi, then D_{chi^l} for
/// each l <= i with chi^l in T_k listed earlier, then H parts up to i+3.
/// Each target is the node carrying the D store, or nullopt for H.
std::vector<std::optional<Node>> split_targets(Listing& listing, const FiniteTree& tree,
                                               const Node& alpha, std::size_t k);
/// Parts for the first pulled ball: the D stores on alpha's path, then H.
std::vector<std::optional<Node>> e_targets(Listing& listing, const FiniteTree& tree,
                                           const Node& alpha, std::size_t k);

/// Least count, ties to the least index, among counts[from..].
std::size_t least_filled(const std::vector<std::size_t>& counts, std::size_t from = 0);

/// State of R w.r.t. e: 4 if a registered (e, e') splits R exactly, 3 if it
/// splits M exactly, 2 if |W_e & R| >= threshold, otherwise 1.
int estate_of(const FiniteSet& r, const FiniteSet& m, const std::function<bool(std::size_t, Natural)>& in_w,
              std::size_t w_count, std::size_t e,
              const std::vector<std::pair<Natural, Natural>>& witnesses, std::size_t threshold);

/// Selection over candidate state strings (higher code greater, compared
/// lexicographically on prefixes). selected[m] is the candidate whose
/// (m+1)-prefix is greatest, ties to the least index; candidates never
/// selected are skipped.
struct EklSelection {
  std::vector<std::size_t> selected;
  std::vector<std::size_t> skipped;
};
EklSelection ekl_select(const std::vector<std::vector<int>>& strings);

/// One maximal-set step on a complement a_0 < a_1 < ...: the least e < cap
/// with some later a_i of strictly higher e-state; returns (e, i) for the
/// least such i of greatest state. `key` has W_j's bit at position 31-j.
std::optional<std::pair<std::size_t, std::size_t>> maximal_pull_step(
    const std::vector<Natural>& complement, const std::function<std::uint32_t(Natural)>& key,
    std::size_t cap);

/// "R@0/<0,1>" style store keys used in traces.
std::string store_key(char set, std::size_t k, const Node& node);
bool parse_store_key(const std::string& key, char& set, std::size_t& k, Node& node);
Node parse_node(const std::string& text);
nlohmann::json node_json(const Node& node);

/// Finite-stage simulator of the coding construction.
class Engine {
 public:
  explicit Engine(RunConfig config);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const RunConfig& config() const;
  Stage stage() const;
  nlohmann::json header() const;
  /// Advances one stage and returns its trace record.
  nlohmann::json step();
  /// Header line, then config().stages records, one JSON object per line.
  void run(std::ostream& out);

  const Node& approximation() const;
  /// 'R', 'E', 'D' or 'M' store of tree k at node; empty if absent.
  FiniteSet store(char set, std::size_t k, const Node& node) const;
  std::optional<Node> position(std::size_t k, Natural ball) const;
  bool is_allowed(std::size_t k, Natural ball, const Node& node) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cew
