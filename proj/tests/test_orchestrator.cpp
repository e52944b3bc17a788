#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "pathplan/assets.hpp"
#include "pathplan/orchestrator.hpp"
#include "support.hpp"

using namespace pathplan;
using namespace testsupport;
using json = nlohmann::json;

namespace {

const PromptLibrary& prompts() {
  static PromptLibrary library = PromptLibrary::load(default_asset_dir());
  return library;
}

struct Fixture {
  Workspace ws;
  LearnerContext ctx;

  Fixture() {
    ws.graph.points = {kp("kp-1", 1), kp("kp-2", 2), kp("kp-3", 3),
                       kp("kp-4", 4), kp("kp-5", 5)};
    ws.resources = {resource("res-a", {"kp-2"}, 4.0),
                    resource("res-b", {"kp-4"}, 6.0),
                    resource("res-c", {"kp-2", "kp-4"}, 8.0),
                    resource("res-d", {"kp-3"}, 5.0),
                    resource("res-e", {"kp-5"}, 7.0)};
    ws.profiles = {profile("stu-1")};
    ws.finalize();

    ctx.profile = ws.profiles[0];
    ctx.alert = RiskAlert{"stu-1", 3, 0.7};
    ctx.state.learner_id = "stu-1";
    ctx.state.week = 3;
    ctx.state.mastery = {{"kp-1", 0.9}, {"kp-2", 0.3}, {"kp-4", 0.2}};
    ctx.state.status = {{"kp-1", MasteryStatus::Mastered},
                        {"kp-2", MasteryStatus::Weak},
                        {"kp-3", MasteryStatus::Unlearned},
                        {"kp-4", MasteryStatus::Weak},
                        {"kp-5", MasteryStatus::Unlearned}};
    ctx.recommendations.learner_id = "stu-1";
    ctx.recommendations.resource_ids = {"res-a", "res-b", "res-c", "res-d",
                                        "res-e"};
  }
};

std::string report_payload() {
  return json{{"mastered", json::array({"kp-1"})},
              {"weak", json::array({"kp-2", "kp-4"})},
              {"unlearned", json::array({"kp-3", "kp-5"})},
              {"preferences", "scripted"},
              {"risk_summary", "scripted"}}
      .dump();
}

std::string plan_payload(const std::vector<std::string>& ids) {
  json nodes = json::array();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    nodes.push_back(json{{"resource_id", ids[i]},
                         {"position", static_cast<int>(i) + 1},
                         {"local_rationale", "scripted"},
                         {"estimated_minutes", 5.0}});
  }
  return json{{"path", nodes}, {"global_rationale", "scripted"}}.dump();
}

std::string accept_payload() {
  return json{{"accepted", true},
              {"clt_verdict", "pass"},
              {"zpd_verdict", "pass"},
              {"suggestions", json::array()}}
      .dump();
}

std::string reject_payload() {
  return json{{"accepted", false},
              {"clt_verdict", "pass"},
              {"zpd_verdict", "non_progressive"},
              {"suggestions",
               json::array({json{{"category", "zpd"},
                                 {"description", "reorder by difficulty"},
                                 {"positions", json::array({2})}}})}}
      .dump();
}

int count_state(const AgentTranscript& transcript, const std::string& state) {
  int n = 0;
  for (const auto& entry : transcript.entries) {
    if (entry.state == state) ++n;
  }
  return n;
}

// Legal state language: analyze? (plan reflect){1..max} | analyze? plan.
bool sequence_legal(const AgentTranscript& transcript, int max_versions,
                    bool no_analytics, bool no_reflection) {
  std::size_t i = 0;
  const auto& entries = transcript.entries;
  if (!no_analytics) {
    if (i >= entries.size() || entries[i].state != "analyze") return false;
    ++i;
  }
  int rounds = 0;
  while (i < entries.size()) {
    if (entries[i].state != "plan") return false;
    ++i;
    if (!no_reflection) {
      if (i >= entries.size() || entries[i].state != "reflect") return false;
      ++i;
    }
    ++rounds;
    if (no_reflection) break;
  }
  return i == entries.size() && rounds >= 1 && rounds <= max_versions;
}

SessionConfig malpp_config() {
  SessionConfig config;
  config.method = PlanMethod::Malpp;
  return config;
}

}  // namespace

TEST_CASE("accept on first reflection closes the session") {
  Fixture f;
  ScriptedBackend backend;
  backend.enqueue("analytics", report_payload());
  backend.enqueue("planner", plan_payload({"res-a", "res-b"}));
  backend.enqueue("reflector", accept_payload());

  auto result = run_malpp(backend, prompts(), f.ws, f.ctx, malpp_config());
  CHECK(count_state(result.transcript, "plan") == 1);
  CHECK(count_state(result.transcript, "reflect") == 1);
  CHECK(result.path.provenance.accepted_by_reflection);
  CHECK(result.path.provenance.plan_versions == 1);
  CHECK(result.transcript.outcome == "accepted");
  CHECK(sequence_legal(result.transcript, 3, false, false));
}

TEST_CASE("reject reject accept runs three versions and accepts") {
  Fixture f;
  ScriptedBackend backend;
  backend.enqueue("analytics", report_payload());
  backend.enqueue("planner", plan_payload({"res-b", "res-a"}));
  backend.enqueue("planner", plan_payload({"res-a", "res-c"}));
  backend.enqueue("planner", plan_payload({"res-a", "res-b"}));
  backend.enqueue("reflector", reject_payload());
  backend.enqueue("reflector", reject_payload());
  backend.enqueue("reflector", accept_payload());

  auto result = run_malpp(backend, prompts(), f.ws, f.ctx, malpp_config());
  CHECK(count_state(result.transcript, "plan") == 3);
  CHECK(count_state(result.transcript, "reflect") == 3);
  CHECK(result.path.provenance.accepted_by_reflection);
  CHECK(result.path.provenance.plan_versions == 3);
  CHECK(result.path.nodes[1].resource_id == "res-b");
  CHECK(sequence_legal(result.transcript, 3, false, false));
}

TEST_CASE("three rejections adopt the final version by default") {
  Fixture f;
  ScriptedBackend backend;
  backend.enqueue("analytics", report_payload());
  for (int i = 0; i < 3; ++i) {
    backend.enqueue("planner", plan_payload({"res-b", "res-a"}));
    backend.enqueue("reflector", reject_payload());
  }
  auto result = run_malpp(backend, prompts(), f.ws, f.ctx, malpp_config());
  CHECK(count_state(result.transcript, "plan") == 3);
  CHECK(count_state(result.transcript, "reflect") == 3);
  CHECK_FALSE(result.path.provenance.accepted_by_reflection);
  CHECK(result.path.provenance.plan_versions == 3);
  CHECK(result.transcript.outcome == "adopted_by_default");
}

TEST_CASE("revision prompts carry the rejected path and the suggestions") {
  Fixture f;
  ScriptedBackend backend;
  backend.enqueue("analytics", report_payload());
  backend.enqueue("planner", plan_payload({"res-b", "res-a"}));
  backend.enqueue("planner", plan_payload({"res-a", "res-b"}));
  backend.enqueue("reflector", reject_payload());
  backend.enqueue("reflector", accept_payload());

  auto result = run_malpp(backend, prompts(), f.ws, f.ctx, malpp_config());
  REQUIRE(count_state(result.transcript, "plan") == 2);
  const auto& second_plan = result.transcript.entries[3];
  REQUIRE(second_plan.state == "plan");
  CHECK(second_plan.attempts[0].user_text.find("res-b") != std::string::npos);
  CHECK(second_plan.attempts[0].user_text.find("reorder by difficulty") !=
        std::string::npos);
}

TEST_CASE("no_reflection plans once and adopts immediately") {
  Fixture f;
  ScriptedBackend backend;
  backend.enqueue("analytics", report_payload());
  backend.enqueue("planner", plan_payload({"res-a"}));
  SessionConfig config = malpp_config();
  config.ablations = {kAblateNoReflection};

  auto result = run_malpp(backend, prompts(), f.ws, f.ctx, config);
  CHECK(count_state(result.transcript, "plan") == 1);
  CHECK(count_state(result.transcript, "reflect") == 0);
  CHECK_FALSE(result.path.provenance.accepted_by_reflection);
  CHECK(result.path.provenance.ablations.count(kAblateNoReflection) == 1);
  CHECK(sequence_legal(result.transcript, 3, false, true));
}

TEST_CASE("no_analytics skips the analyze state and the report block") {
  Fixture f;
  ScriptedBackend backend;
  backend.enqueue("planner", plan_payload({"res-a"}));
  backend.enqueue("reflector", accept_payload());
  SessionConfig config = malpp_config();
  config.ablations = {kAblateNoAnalytics};

  auto result = run_malpp(backend, prompts(), f.ws, f.ctx, config);
  CHECK(count_state(result.transcript, "analyze") == 0);
  const auto& plan_entry = result.transcript.entries[0];
  REQUIRE(plan_entry.state == "plan");
  CHECK(plan_entry.attempts[0].user_text.find(
            "Diagnostic report from the learner analytics agent") ==
        std::string::npos);
  CHECK(sequence_legal(result.transcript, 3, true, false));
}

TEST_CASE("agent failure aborts with the transcript preserved") {
  Fixture f;
  ScriptedBackend backend;
  backend.enqueue("analytics", report_payload());
  for (int i = 0; i < 3; ++i) backend.enqueue("planner", "not json");
  try {
    run_malpp(backend, prompts(), f.ws, f.ctx, malpp_config());
    FAIL("expected SessionError");
  } catch (const SessionError& error) {
    CHECK(error.kind() == ErrorKind::ValidationFailedAfterRepairs);
    CHECK(error.transcript().outcome.find("aborted") == 0);
    CHECK(error.transcript().entries.size() == 1);  // the analyze entry
  }
}

TEST_CASE("token totals equal the sum over transcript attempts") {
  Fixture f;
  ScriptedBackend backend;
  backend.enqueue("analytics", report_payload());
  backend.enqueue("planner", "garbage first");
  backend.enqueue("planner", plan_payload({"res-a"}));
  backend.enqueue("reflector", accept_payload());
  auto result = run_malpp(backend, prompts(), f.ws, f.ctx, malpp_config());
  long prompt = 0, completion = 0;
  for (const auto& entry : result.transcript.entries) {
    for (const auto& attempt : entry.attempts) {
      prompt += attempt.prompt_tokens;
      completion += attempt.completion_tokens;
    }
  }
  CHECK(result.transcript.total_prompt_tokens == prompt);
  CHECK(result.transcript.total_completion_tokens == completion);
}

TEST_CASE("rule-based malpp accepts its own plan in one round") {
  Fixture f;
  f.ctx.capacity_minutes = 6.0;  // band [4.8, 7.2]; the mock trims toward it
  auto backend = make_rule_based_backend();
  auto result = run_malpp(*backend, prompts(), f.ws, f.ctx, malpp_config());
  CHECK(result.path.provenance.accepted_by_reflection);
  CHECK(result.path.provenance.plan_versions == 1);
  CHECK(sequence_legal(result.transcript, 3, false, false));
}

TEST_CASE("slmlpp makes exactly one model call") {
  Fixture f;
  SessionConfig config;
  config.method = PlanMethod::Slmlpp;
  auto backend = make_rule_based_backend();
  auto result = run_slmlpp(*backend, prompts(), f.ws, f.ctx, config);
  REQUIRE(result.transcript.entries.size() == 1);
  CHECK(result.transcript.entries[0].agent_role == "slmlpp");
  CHECK(result.transcript.entries[0].attempts.size() == 1);
  for (const auto& node : result.path.nodes) {
    CHECK(std::find(f.ctx.recommendations.resource_ids.begin(),
                    f.ctx.recommendations.resource_ids.end(),
                    node.resource_id) != f.ctx.recommendations.resource_ids.end());
  }

  auto again = run_slmlpp(*backend, prompts(), f.ws, f.ctx, config);
  CHECK(plan_to_json(again.path) == plan_to_json(result.path));
}

TEST_CASE("slmlpp enforces recommended ids like the planner") {
  Fixture f;
  ScriptedBackend backend;
  json bad{{"path", json::array({json{{"resource_id", "res-ghost"},
                                      {"position", 1},
                                      {"local_rationale", "x"},
                                      {"estimated_minutes", 1.0}}})},
           {"global_rationale", "x"}};
  for (int i = 0; i < 3; ++i) backend.enqueue("slmlpp", bad.dump());
  SessionConfig config;
  config.method = PlanMethod::Slmlpp;
  try {
    run_slmlpp(backend, prompts(), f.ws, f.ctx, config);
    FAIL("expected SessionError");
  } catch (const SessionError& error) {
    CHECK(error.kind() == ErrorKind::HallucinatedResource);
  }
}

TEST_CASE("rbm is deterministic under a fixed seed") {
  Fixture f;
  SessionConfig config;
  config.method = PlanMethod::Rbm;
  config.seed = 13;
  auto a = run_rbm(f.ws, f.ctx, config);
  auto b = run_rbm(f.ws, f.ctx, config);
  REQUIRE(a.nodes.size() == b.nodes.size());
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    CHECK(a.nodes[i].resource_id == b.nodes[i].resource_id);
  }
  CHECK(a.global_rationale.empty());
  CHECK(a.provenance.method == PlanMethod::Rbm);
}

TEST_CASE("rbm requires a seed") {
  Fixture f;
  SessionConfig config;
  config.method = PlanMethod::Rbm;
  CHECK_THROWS_AS(run_rbm(f.ws, f.ctx, config), Error);
}

TEST_CASE("rbm draws a duplicate-free subset of the recommendations") {
  Fixture f;
  SessionConfig config;
  config.method = PlanMethod::Rbm;
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    config.seed = seed;
    auto path = run_rbm(f.ws, f.ctx, config);
    CHECK(path.nodes.size() >= 1);
    CHECK(path.nodes.size() <= f.ctx.recommendations.resource_ids.size());
    std::set<std::string> seen;
    for (const auto& node : path.nodes) {
      CHECK(seen.insert(node.resource_id).second);
      CHECK(std::find(f.ctx.recommendations.resource_ids.begin(),
                      f.ctx.recommendations.resource_ids.end(),
                      node.resource_id) != f.ctx.recommendations.resource_ids.end());
    }
  }
}

TEST_CASE("rbm truncates N to the pool size") {
  Fixture f;
  f.ctx.recommendations.resource_ids = {"res-a", "res-b", "res-c"};
  SessionConfig config;
  config.method = PlanMethod::Rbm;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    config.seed = seed;
    auto path = run_rbm(f.ws, f.ctx, config);
    CHECK(path.nodes.size() <= 3);
  }
}

TEST_CASE("rbm mean length sits near the analytic 5.5 for |R| = 20") {
  Workspace ws;
  ws.graph.points = {kp("kp-1", 1)};
  LearnerContext ctx;
  ctx.profile = profile("stu");
  for (int i = 0; i < 20; ++i) {
    std::string id = "res-" + std::to_string(i);
    ws.resources.push_back(resource(id, {"kp-1"}));
    ctx.recommendations.resource_ids.push_back(id);
  }
  ws.profiles = {ctx.profile};
  ws.finalize();

  SessionConfig config;
  config.method = PlanMethod::Rbm;
  double total = 0;
  const int runs = 2000;
  for (int seed = 1; seed <= runs; ++seed) {
    config.seed = static_cast<std::uint64_t>(seed);
    total += static_cast<double>(run_rbm(ws, ctx, config).nodes.size());
  }
  double mean = total / runs;
  CHECK(mean > 5.3);
  CHECK(mean < 5.7);
}

TEST_CASE("oracle picks the higher-effectiveness singleton") {
  Fixture f;
  f.ctx.recommendations.resource_ids = {"res-a", "res-b"};
  EffectivenessModel eff;
  eff.per_resource = {{"res-a", 1.0}, {"res-b", 2.0}};
  auto path = run_oracle(f.ws, f.ctx, eff, 1);
  REQUIRE(path.nodes.size() == 1);
  CHECK(path.nodes[0].resource_id == "res-b");
  CHECK(path.provenance.method == PlanMethod::Oracle);
}

TEST_CASE("oracle honors prerequisite feasibility") {
  Workspace ws;
  ws.graph.points = {kp("kp-a", 1), kp("kp-b", 2)};
  ws.graph.prerequisites = {{"kp-a", "kp-b"}};
  ws.resources = {resource("r1", {"kp-a"}), resource("r2", {"kp-b"})};
  ws.profiles = {profile("stu")};
  ws.finalize();

  LearnerContext ctx;
  ctx.profile = ws.profiles[0];
  ctx.alert = RiskAlert{"stu", 1, 0.9};
  ctx.state.learner_id = "stu";
  ctx.state.status = {{"kp-a", MasteryStatus::Unlearned},
                      {"kp-b", MasteryStatus::Unlearned}};
  ctx.recommendations.resource_ids = {"r1", "r2"};

  auto feasible = enumerate_feasible_paths(ws, ctx, 2);
  CHECK(std::find(feasible.begin(), feasible.end(),
                  std::vector<std::string>{"r2"}) == feasible.end());
  CHECK(std::find(feasible.begin(), feasible.end(),
                  std::vector<std::string>{"r1", "r2"}) != feasible.end());

  EffectivenessModel eff;
  eff.per_resource = {{"r1", 0.1}, {"r2", 5.0}};
  auto path = run_oracle(ws, ctx, eff, 2);
  REQUIRE(path.nodes.size() == 2);
  CHECK(path.nodes[0].resource_id == "r1");
  CHECK(path.nodes[1].resource_id == "r2");
  CHECK(path_is_feasible({"r1", "r2"}, ctx.state, ws));
  CHECK_FALSE(path_is_feasible({"r2"}, ctx.state, ws));
}

TEST_CASE("all-zero effectiveness falls back to the shortest cheapest path") {
  Fixture f;
  EffectivenessModel eff;
  for (const auto& id : f.ctx.recommendations.resource_ids) {
    eff.per_resource[id] = 0.0;
  }
  auto path = run_oracle(f.ws, f.ctx, eff, 3);
  REQUIRE(path.nodes.size() == 1);
  CHECK(path.nodes[0].resource_id == "res-a");
}

TEST_CASE("the optional duration cap prunes long paths") {
  Fixture f;
  EffectivenessModel eff;
  for (const auto& id : f.ctx.recommendations.resource_ids) {
    eff.per_resource[id] = 1.0;
  }
  // Durations: res-a 4, res-b 6, res-c 8, res-d 5, res-e 7. A 9-minute cap
  // allows at most one of the heavier resources or a+d.
  auto capped = run_oracle(f.ws, f.ctx, eff, 3, 9.0);
  double total = 0;
  for (const auto& node : capped.nodes) {
    total += f.ws.find_resource(node.resource_id)->duration_estimate;
  }
  CHECK(total <= 9.0);
  CHECK(capped.nodes.size() == 2);  // score 2 beats any single resource

  auto uncapped = run_oracle(f.ws, f.ctx, eff, 3);
  CHECK(uncapped.nodes.size() == 3);
}

TEST_CASE("oracle rejects oversized instances") {
  Fixture f;
  Workspace ws = f.ws;
  LearnerContext ctx = f.ctx;
  ctx.recommendations.resource_ids.clear();
  for (int i = 0; i < 13; ++i) {
    std::string id = "big-" + std::to_string(i);
    ws.resources.push_back(resource(id, {"kp-1"}));
    ctx.recommendations.resource_ids.push_back(id);
  }
  ws.finalize();
  EffectivenessModel eff;
  for (const auto& id : ctx.recommendations.resource_ids) {
    eff.per_resource[id] = 1.0;
  }
  try {
    run_oracle(ws, ctx, eff, 3);
    FAIL("expected InstanceTooLarge");
  } catch (const Error& error) {
    CHECK(error.kind() == ErrorKind::InstanceTooLarge);
  }
  CHECK_THROWS_AS(run_oracle(f.ws, f.ctx, eff, 7), Error);
}

TEST_CASE("oracle dominates the enumerated feasible set") {
  Fixture f;
  EffectivenessModel eff = mastery_gap_effectiveness(f.ctx.state, f.ws.resources);
  auto best = run_oracle(f.ws, f.ctx, eff, 3);
  double best_score = score_path(best, eff);
  for (const auto& ids : enumerate_feasible_paths(f.ws, f.ctx, 3)) {
    CHECK(best_score >= score_path(path("stu-1", ids), eff) - 1e-9);
  }
  std::vector<std::string> best_ids;
  for (const auto& node : best.nodes) best_ids.push_back(node.resource_id);
  CHECK(path_is_feasible(best_ids, f.ctx.state, f.ws));
}

TEST_CASE("method labels sort ablation flags") {
  SessionConfig config;
  config.method = PlanMethod::Malpp;
  config.ablations = {kAblateNoZpd, kAblateNoClt};
  CHECK(method_label(config) == "malpp+no_clt+no_zpd");
}

TEST_CASE("transcripts serialize with attempts and totals") {
  Fixture f;
  auto backend = make_rule_based_backend();
  auto result = run_malpp(*backend, prompts(), f.ws, f.ctx, malpp_config());
  json record = transcript_to_json(result.transcript);
  CHECK(record.at("session_id") == "malpp-stu-1");
  CHECK(record.at("entries").size() == result.transcript.entries.size());
  CHECK(record.at("total_prompt_tokens").get<long>() ==
        result.transcript.total_prompt_tokens);
}
