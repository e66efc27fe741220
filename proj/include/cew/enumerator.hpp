#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cew/core.hpp"
#include "cew/predicate.hpp"

namespace cew {

/// Stage-indexed presentation of a c.e. set, W_{e,s}.
///
/// Either an explicit table (stage -> elements entering at that stage) or a
/// guard predicate G(n,s): n enters at the first stage s > n with G(n,s).
/// Elements below the stage are the only candidates, so W_s is finite.
///
/// Materialization is lazy and cached behind a mutex; the observable history
/// is monotone and identical across threads.
class Enumerator {
 public:
  using Table = std::map<Stage, FiniteSet>;

  static Enumerator from_table(std::string id, Table table);
  static Enumerator from_guard(std::string id, PredicateSpec guard);

  const std::string& id() const { return state_->id; }
  bool is_table() const { return !state_->guard.has_value(); }
  const Table& table() const { return state_->table; }
  const std::optional<PredicateSpec>& guard() const { return state_->guard; }

  /// W_{e,s}: every element that entered at a stage <= s.
  FiniteSet enumerate_upto(Stage s) const;

  /// The stage at which x entered, if that happened at or before `s`.
  std::optional<Stage> entry_stage(Natural x, Stage s) const;

  bool contains(Natural x, Stage s) const { return entry_stage(x, s).has_value(); }
  /// Elements whose entry stage is exactly s.
  std::vector<Natural> entering_at(Stage s) const;

  /// Highest stage materialized so far.
  Stage bound() const;

  nlohmann::json to_json() const;

 private:
  struct State {
    std::string id;
    Table table;
    std::optional<PredicateSpec> guard;
    bool stage_free = false;
    mutable std::mutex mutex;
    mutable Stage materialized = 0;           // guard mode: stages 0..materialized-1 done
    mutable std::map<Natural, Stage> entered;  // guard mode cache; table mode index
    mutable std::map<Stage, std::vector<Natural>> arrivals;  // inverse of `entered`
  };

  void materialize(Stage s) const;

  std::shared_ptr<State> state_;
};

/// {"id": string, "stages": {"<s>": [naturals]}}, or
/// {"id": string, "guard": "G(n,s) := ..."}.
Enumerator enumerator_from_json(const nlohmann::json& j);

}  // namespace cew
