#include <doctest.h>

#include <sstream>

#include "cew/audit.hpp"

using namespace cew;

namespace {

std::string run_text(const RunConfig& c) {
  std::ostringstream out;
  Engine e(c);
  e.run(out);
  return out.str();
}

Trace run_trace(const RunConfig& c) { return parse_trace_text(run_text(c)); }

}  // namespace

TEST_CASE("trace io") {
  const std::string text = run_text(default_run_config(30));
  const Trace t = parse_trace_text(text);
  CHECK(t.stages.size() == 30);
  CHECK(serialize_trace(t) == text);
  CHECK(trace_digest(text) == trace_digest(run_text(default_run_config(30))));
  CHECK(trace_digest(text).size() == 16);
  CHECK_THROWS_AS(parse_trace_text(""), Error);
  CHECK_THROWS_AS(parse_trace_text("{\"kind\":\"stage\"}\n"), Error);
  CHECK_THROWS_AS(parse_trace_text(text + "{not json\n"), Error);
  // Stages must be consecutive.
  const auto cut = text.find('\n', text.find('\n') + 1);
  CHECK_THROWS_AS(parse_trace_text(text.substr(0, text.find('\n') + 1) + text.substr(cut + 1)), Error);
}

TEST_CASE("clean standard run passes every check") {
  const Trace t = run_trace(default_run_config(1500));
  const AuditReport rep = audit_trace(t);
  CHECK(rep.ok());
  for (const auto& c : rep.checks) {
    INFO(c.name << ": " << c.detail << " " << c.witness.dump());
    CHECK(c.status != CheckStatus::Fail);
  }
  CHECK(rep.find("partitions")->status == CheckStatus::Pass);
  CHECK(rep.find("ball_discipline")->status == CheckStatus::Pass);
  CHECK(rep.find("marker_monotonicity")->status == CheckStatus::Pass);
  CHECK(rep.find("dump_permanence")->status == CheckStatus::Pass);
  CHECK(rep.find("homogeneity")->status == CheckStatus::Pass);
  CHECK(rep.find("friedberg")->status == CheckStatus::Pass);
  CHECK(rep.find("hemimaximal")->status == CheckStatus::NotApplicable);
  CHECK(rep.find("homogeneity")->counts["destroys"].get<std::size_t>() > 0);
  const auto j = rep.to_json();
  CHECK(j["ok"] == true);
  CHECK(j["checks"].size() == audit_check_names().size());
}

TEST_CASE("audits are pure and thread-count independent") {
  const Trace t = run_trace(default_run_config(400));
  CHECK(audit_trace(t, {}, 1).to_json() == audit_trace(t, {}, 4).to_json());
  CHECK(audit_trace(t).to_json() == audit_trace(t).to_json());
  CHECK_THROWS_AS(audit_trace(t, {"nonsense"}), Error);
  const auto one = audit_trace(t, {"friedberg"});
  REQUIRE(one.checks.size() == 1);
  CHECK(one.checks[0].name == "friedberg");
}

TEST_CASE("hemimaximal run passes") {
  const Trace t = run_trace(default_hemimaximal_config(1500));
  const AuditReport rep = audit_trace(t);
  for (const auto& c : rep.checks) {
    INFO(c.name << ": " << c.detail << " " << c.witness.dump());
    CHECK(c.status != CheckStatus::Fail);
  }
  const auto* h = rep.find("hemimaximal");
  REQUIRE(h);
  CHECK(h->status == CheckStatus::Pass);
  CHECK(h->counts["mapped"].get<std::size_t>() > 0);
}

TEST_CASE("empty and single-tree traces") {
  const Trace empty = run_trace(default_run_config(0));
  const auto rep = audit_trace(empty);
  CHECK(rep.ok());
  CHECK(rep.find("partitions")->status == CheckStatus::NotApplicable);

  RunConfig one = default_run_config(300);
  one.trees.resize(1);
  const auto h = audit_homogeneity(run_trace(one));
  CHECK(h.status == CheckStatus::Pass);
  CHECK(h.detail.find("vacuous") != std::string::npos);
}

TEST_CASE("pair homogeneity rejects traces of different runs") {
  const Trace a = run_trace(default_run_config(200));
  const Trace b = run_trace(default_run_config(201));
  CHECK_THROWS_AS(audit_homogeneity_pair(a, b), Error);
  CHECK(audit_homogeneity_pair(a, run_trace(default_run_config(200))).status == CheckStatus::Pass);
}

TEST_CASE("each fault fixture is flagged by its check with a witness") {
  for (Fault f : all_faults()) {
    CAPTURE(fault_name(f));
    CHECK(fault_from_name(fault_name(f)) == f);
    const Trace t = parse_trace_text(make_fault_fixture(f, 1500));
    const AuditReport rep = audit_trace(t);
    CHECK_FALSE(rep.ok());
    const auto* c = rep.find(fault_check(f));
    REQUIRE(c);
    CHECK(c->status == CheckStatus::Fail);
    CHECK(c->witness.contains("stage"));
    CHECK((c->witness.contains("element") || c->witness.contains("addresses")));
  }
  CHECK_THROWS_AS(fault_from_name("meteor"), Error);
}

TEST_CASE("requirement containment is report-only") {
  const Trace t = run_trace(default_run_config(600));
  const auto c = audit_requirement_containment(t, 10);
  CHECK(c.status == CheckStatus::Pass);
  CHECK(c.counts["patterns"].size() == 2 * t.config.w.size());
  for (const auto& p : c.counts["patterns"]) CHECK(p["least_i"].contains("3_lt"));
}
