#pragma once

#include <istream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cew/engine.hpp"

namespace cew {

/// A parsed trace: the header line and one record per stage.
struct Trace {
  nlohmann::json header;
  RunConfig config;
  std::vector<nlohmann::json> stages;

  std::string run_id() const { return header.at("run_id").get<std::string>(); }
};

Trace parse_trace(std::istream& in);
Trace parse_trace_text(const std::string& text);
std::string serialize_trace(const Trace& trace);
/// FNV-1a 64 over the trace bytes, as 16 hex digits.
std::string trace_digest(const std::string& text);

enum class CheckStatus { Pass, Fail, NotApplicable };
std::string to_string(CheckStatus s);

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  std::string detail;
  nlohmann::json witness;  // stage, element, addresses; set on fail
  nlohmann::json counts = nlohmann::json::object();
  nlohmann::json thresholds = nlohmann::json::object();

  nlohmann::json to_json() const;
};

struct AuditReport {
  std::string run_id;
  std::size_t stages = 0;
  std::vector<CheckResult> checks;

  bool ok() const;
  const CheckResult* find(const std::string& name) const;
  nlohmann::json to_json() const;
};

CheckResult audit_partitions(const Trace& t);
CheckResult audit_ball_discipline(const Trace& t);
CheckResult audit_marker_monotonicity(const Trace& t);
CheckResult audit_dump_permanence(const Trace& t);
CheckResult audit_homogeneity(const Trace& t);
/// Both traces must come from one run (same run id, else Error); each must be
/// homogeneous and their per-tree dumped-index sets must agree at every stage.
CheckResult audit_homogeneity_pair(const Trace& a, const Trace& b);
CheckResult audit_friedberg(const Trace& t);
/// Report-only: which of the three containment patterns hold at the last stage.
CheckResult audit_requirement_containment(const Trace& t, std::size_t threshold);
CheckResult audit_hemimaximal(const Trace& t);

std::vector<std::string> audit_check_names();

/// Runs the named checks (all when empty) in parallel. `threads` = 0 reads
/// CE_WORKBENCH_THREADS, falling back to the hardware concurrency.
AuditReport audit_trace(const Trace& t, const std::vector<std::string>& only = {}, unsigned threads = 0);

enum class Fault { DOverlap, HomogeneityDesync, PartStarvation, MarkerRegression, BallRightDrift };
std::vector<Fault> all_faults();
std::string fault_name(Fault f);
Fault fault_from_name(const std::string& name);
/// The check expected to flag the fault.
std::string fault_check(Fault f);
/// A default-config trace with the fault injected, as trace text.
std::string make_fault_fixture(Fault f, Stage stages = 1500);

}  // namespace cew
