#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include <json.hpp>

#include "cew/predicate.hpp"
#include "cew/tree.hpp"

namespace cew {

/// The infinite tree of height 1: the root and every <s>.
TreeSpec t_pi2();

/// l(n,s): greatest l < s such that every x <= l has a y < s with R(n,x,y);
/// none when x = 0 already fails (in particular at s = 0).
std::optional<Natural> expansion_length(const PredicateSpec& r, Natural n, Stage s);

/// s is expansionary for n iff l(n,s) > l(n,s-1), with l(n,0) = none and any
/// defined value exceeding none.
bool is_expansionary(std::optional<Natural> previous, std::optional<Natural> current);

struct ReductionTrace {
  std::string predicate;
  Natural n = 0;
  std::vector<std::optional<Natural>> l;  // l[s] for s < stages
  std::vector<Stage> expansionary;

  nlohmann::json to_json() const;
  static ReductionTrace from_json(const nlohmann::json& j);
};

ReductionTrace reduction_trace(const PredicateSpec& r, Natural n, Stage stages);

/// Height-1 tree: <s> is a member iff s is expansionary for n.
TreeSpec t2A(const PredicateSpec& r, Natural n);

/// Level-1 entry carrying n children in t_pi3 (cantor_pair(n,i) + 1).
Natural pi3_entry(Natural n, Natural i);
/// Level-1 entry of t_sigma3's node with infinitely many children.
inline constexpr Natural kReservedEntry = 0;

TreeSpec t_pi3();
TreeSpec t_sigma3();

/// Recursive families for n >= 3: t_pin(n+1) has every level-1 entry >= 1
/// carrying t_sigman(n); t_sigman(n+1) adds entry 0 carrying t_pin(n).
TreeSpec t_pin(Natural n);
TreeSpec t_sigman(Natural n);

/// Moving-marker construction turning S(n,x,y) (A(n,x) iff forall y S) into a
/// computable R with f(n) = x iff forall s R(n,x,s) and dom f = dom A.
///
/// Rows n < `rows` are materialized. Stage s (s >= 1) defines R(n,x,s) for
/// n, x < s; outside that square R holds.
class MarkerMachine {
 public:
  MarkerMachine(PredicateSpec s_pred, Natural rows);

  const PredicateSpec& predicate() const { return s_pred_; }
  Natural rows() const { return rows_; }
  /// Last completed stage (0 before the first step).
  Stage stage() const { return stage_; }

  void step();
  void run_to(Stage s);

  /// R(n,x,s) for s <= stage().
  bool R(Natural n, Natural x, Stage s) const;
  /// The value v with R(n,v,s), if some marker holds at stage s.
  std::optional<Natural> holder(Natural n, Stage s) const;
  /// Current marker value c(n,x).
  Natural marker(Natural n, Natural x) const;

  struct InvariantStatus {
    bool boundary = true;     // R holds when n >= s or x >= s
    bool at_most_one = true;  // at most one x < s with R(n,x,s), each n < s
    bool distinct = true;     // markers of one row pairwise distinct
    std::string detail;
    bool ok() const { return boundary && at_most_one && distinct; }
  };
  /// Checks the three invariants at the last completed stage.
  InvariantStatus check_invariants() const;

  /// n < n_bound with some a such that R(n,a,t) for all t in (max(n,a), upto].
  std::map<Natural, Natural> stable_witnesses(Natural n_bound, Stage upto) const;

  /// {"rows":..,"stages":[{"s":..,"holders":[v|null,...]}, ...]}
  nlohmann::json rtable_json() const;

 private:
  Natural fresh(Stage s);

  PredicateSpec s_pred_;
  Natural rows_;
  Stage stage_ = 0;
  Natural counter_ = 0;
  std::vector<std::vector<Natural>> markers_;          // [n][x]
  std::vector<char> initialized_;                      // row ever initialized
  std::vector<std::vector<std::optional<Natural>>> first_fail_;  // [n][x] least y with not S
  std::vector<std::vector<Natural>> checked_;          // [n][x] y-bound checked
  std::vector<std::vector<std::optional<Natural>>> holders_;     // [s][n]
};

/// Height-2 tree: even level-1 entries 2m copy t_pi3's entry m; odd entries
/// 2a+1 carry the height-1 expansionary tree of the column R(n,a,.).
/// The machine is advanced lazily as deeper stages are queried.
TreeSpec t3A(std::shared_ptr<MarkerMachine> machine, Natural n);

/// Level-n reduction. Level 2: t2A of a Pi02 matrix R(m,x,y). Level 3: t3A of
/// the marker machine of a Pi01 matrix S(m,x,y). Level >= 4: children <x> for
/// every x, each carrying tnA(level-1, pred, cantor_pair(m,x)).
TreeSpec tnA(Natural level, const PredicateSpec& pred, Natural m);

/// child count -> number of level-1 nodes with that count, on the truncation
/// of depth 2 and the given width.
std::map<Natural, Natural> height2_signature(const TreeSpec& t, Natural width);

/// Level-1 entries below `width` whose child count at width 2*width strictly
/// exceeds the count at `width`.
std::vector<Natural> growing_level1_nodes(const TreeSpec& t, Natural width);

}  // namespace cew
