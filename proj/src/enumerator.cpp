#include "cew/enumerator.hpp"

#include <algorithm>

namespace cew {
namespace {

bool mentions_slot(const Expr& e, std::size_t slot) {
  if (e.kind == Expr::Kind::Variable && e.slot == slot) return true;
  return std::any_of(e.args.begin(), e.args.end(),
                     [&](const ExprPtr& a) { return mentions_slot(*a, slot); });
}

}  // namespace

Enumerator Enumerator::from_table(std::string id, Table table) {
  Enumerator e;
  e.state_ = std::make_shared<State>();
  e.state_->id = std::move(id);
  e.state_->table = std::move(table);
  for (const auto& [stage, elems] : e.state_->table) {
    for (Natural x : elems) {
      if (e.state_->entered.try_emplace(x, stage).second) e.state_->arrivals[stage].push_back(x);
    }
  }
  return e;
}

Enumerator Enumerator::from_guard(std::string id, PredicateSpec guard) {
  if (guard.arity() != 2) throw ArityError("enumerator guard must have parameters (n,s)");
  Enumerator e;
  e.state_ = std::make_shared<State>();
  e.state_->id = std::move(id);
  e.state_->stage_free = !mentions_slot(*guard.body(), 1);
  e.state_->guard = std::move(guard);
  return e;
}

void Enumerator::materialize(Stage s) const {
  // Caller holds the mutex. Guard mode: n enters at least stage t > n with G(n,t).
  auto& st = *state_;
  while (st.materialized <= s) {
    const Stage t = st.materialized;
    // A guard that ignores s can only fire at n's first eligible stage.
    const Natural first = st.stage_free && t > 0 ? t - 1 : 0;
    for (Natural n = first; n < t; ++n) {
      if (st.entered.contains(n)) continue;
      if ((*st.guard)({n, t})) {
        st.entered.emplace(n, t);
        st.arrivals[t].push_back(n);
      }
    }
    ++st.materialized;
  }
}

FiniteSet Enumerator::enumerate_upto(Stage s) const {
  std::lock_guard lock(state_->mutex);
  if (state_->guard) materialize(s);
  FiniteSet out;
  for (const auto& [x, stage] : state_->entered) {
    if (stage <= s) out.insert(x);
  }
  return out;
}

std::optional<Stage> Enumerator::entry_stage(Natural x, Stage s) const {
  std::lock_guard lock(state_->mutex);
  if (state_->guard) materialize(s);
  auto it = state_->entered.find(x);
  if (it == state_->entered.end() || it->second > s) return std::nullopt;
  return it->second;
}

std::vector<Natural> Enumerator::entering_at(Stage s) const {
  std::lock_guard lock(state_->mutex);
  if (state_->guard) materialize(s);
  auto it = state_->arrivals.find(s);
  return it == state_->arrivals.end() ? std::vector<Natural>{} : it->second;
}

Stage Enumerator::bound() const {
  std::lock_guard lock(state_->mutex);
  if (state_->guard) return state_->materialized == 0 ? 0 : state_->materialized - 1;
  return state_->table.empty() ? 0 : state_->table.rbegin()->first;
}

nlohmann::json Enumerator::to_json() const {
  nlohmann::json j;
  j["id"] = id();
  if (guard()) {
    j["guard"] = guard()->render();
    return j;
  }
  nlohmann::json stages = nlohmann::json::object();
  for (const auto& [s, elems] : table()) stages[std::to_string(s)] = elems;
  j["stages"] = stages;
  return j;
}

Enumerator enumerator_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
    throw Error("enumerator: expected object with string field \"id\"");
  }
  const std::string id = j["id"];
  if (j.contains("guard")) return Enumerator::from_guard(id, parse_predicate(j["guard"].get<std::string>()));
  if (!j.contains("stages") || !j["stages"].is_object()) {
    throw Error("enumerator " + id + ": expected \"stages\" object or \"guard\"");
  }
  Enumerator::Table table;
  for (const auto& [key, elems] : j["stages"].items()) {
    Stage s = 0;
    try {
      std::size_t used = 0;
      s = std::stoull(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw Error("enumerator " + id + ": stage key '" + key + "' is not a natural");
    }
    auto& bucket = table[s];
    for (const auto& x : elems) {
      if (!x.is_number_unsigned()) throw Error("enumerator " + id + ": elements must be naturals");
      bucket.insert(x.get<Natural>());
    }
  }
  return Enumerator::from_table(id, std::move(table));
}

}  // namespace cew
