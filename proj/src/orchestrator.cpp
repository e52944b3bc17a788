#include "pathplan/orchestrator.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

namespace pathplan {

using json = nlohmann::json;

namespace {

constexpr int kOracleMaxResources = 12;
constexpr int kOracleMaxLen = 6;
constexpr int kRbmMaxLen = 10;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

// Small deterministic generator; the session seed mixes the configured seed
// with the learner id so parallel runs stay order-independent.
struct Rng {
  std::uint64_t state;
  std::uint64_t next() { return state = splitmix64(state); }
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t value = next();
    while (value >= limit) value = next();
    return value % n;
  }
};

std::string session_id(const SessionConfig& config, const std::string& learner) {
  return method_label(config) + "-" + learner;
}

void absorb_tokens(AgentTranscript& transcript, const TranscriptEntry& entry) {
  for (const auto& attempt : entry.attempts) {
    transcript.total_prompt_tokens += attempt.prompt_tokens;
    transcript.total_completion_tokens += attempt.completion_tokens;
  }
}

ConstraintConfig effective_constraints(const SessionConfig& config) {
  ConstraintConfig constraints = config.constraints;
  if (config.ablations.count(kAblateNoClt)) constraints.include_clt = false;
  if (config.ablations.count(kAblateNoZpd)) constraints.include_zpd = false;
  return constraints;
}

std::set<std::string> mastered_points(const KnowledgeState& state) {
  std::set<std::string> mastered;
  for (const auto& [kp, status] : state.status) {
    if (status == MasteryStatus::Mastered) mastered.insert(kp);
  }
  return mastered;
}

}  // namespace

std::string method_label(const SessionConfig& config) {
  std::string label = to_string(config.method);
  for (const auto& flag : config.ablations) label += "+" + flag;
  return label;
}

json transcript_to_json(const AgentTranscript& transcript) {
  json entries = json::array();
  for (const auto& entry : transcript.entries) {
    json attempts = json::array();
    for (const auto& attempt : entry.attempts) {
      attempts.push_back(json{{"system_text", attempt.system_text},
                              {"user_text", attempt.user_text},
                              {"response_text", attempt.response_text},
                              {"ok", attempt.ok},
                              {"errors", attempt.errors},
                              {"prompt_tokens", attempt.prompt_tokens},
                              {"completion_tokens", attempt.completion_tokens},
                              {"latency_ms", attempt.latency_ms}});
    }
    entries.push_back(json{{"state", entry.state},
                           {"agent_role", entry.agent_role},
                           {"step", entry.step},
                           {"payload_digest", entry.payload_digest},
                           {"attempts", attempts}});
  }
  return json{{"session_id", transcript.session_id},
              {"learner_id", transcript.learner_id},
              {"method", transcript.method},
              {"outcome", transcript.outcome},
              {"total_prompt_tokens", transcript.total_prompt_tokens},
              {"total_completion_tokens", transcript.total_completion_tokens},
              {"entries", entries}};
}

SessionResult run_malpp(Backend& backend, const PromptLibrary& prompts,
                        const Workspace& ws, const LearnerContext& ctx,
                        const SessionConfig& config) {
  if (config.method != PlanMethod::Malpp) {
    throw Error(ErrorKind::Usage, "run_malpp requires method malpp");
  }
  if (config.max_plan_versions < 1) {
    throw Error(ErrorKind::Usage, "max_plan_versions must be >= 1");
  }
  const bool no_analytics = config.ablations.count(kAblateNoAnalytics) > 0;
  const bool no_reflection = config.ablations.count(kAblateNoReflection) > 0;
  ConstraintConfig constraints = effective_constraints(config);

  AgentTranscript transcript;
  transcript.session_id = session_id(config, ctx.profile.learner_id);
  transcript.learner_id = ctx.profile.learner_id;
  transcript.method = method_label(config);
  int step = 0;

  try {
    std::optional<DiagnosticReport> report;
    if (!no_analytics) {
      TranscriptEntry entry;
      entry.state = "analyze";
      entry.agent_role = "analytics";
      entry.step = ++step;
      report = run_analytics(backend, prompts, ctx, ws,
                             "analytics/" + transcript.session_id,
                             entry.attempts, config.max_repairs);
      entry.payload_digest = digest64(report_to_json(*report).dump());
      absorb_tokens(transcript, entry);
      transcript.entries.push_back(std::move(entry));
    }

    LearningPath path;
    std::optional<RevisionInput> revision;
    bool accepted = false;
    int versions = 0;

    for (int version = 1; version <= config.max_plan_versions; ++version) {
      TranscriptEntry plan_entry;
      plan_entry.state = "plan";
      plan_entry.agent_role = "planner";
      plan_entry.step = ++step;
      path = run_planner(backend, prompts, ctx, ws, report, constraints,
                         revision, "planner/" + transcript.session_id,
                         plan_entry.attempts, config.max_repairs);
      plan_entry.payload_digest = digest64(plan_to_json(path).dump());
      absorb_tokens(transcript, plan_entry);
      transcript.entries.push_back(std::move(plan_entry));
      versions = version;

      if (no_reflection) break;

      TranscriptEntry reflect_entry;
      reflect_entry.state = "reflect";
      reflect_entry.agent_role = "reflector";
      reflect_entry.step = ++step;
      ReflectionResult reflection = run_reflector(
          backend, prompts, ctx, ws, path, constraints,
          "reflector/" + transcript.session_id, reflect_entry.attempts,
          config.max_repairs);
      reflect_entry.payload_digest =
          digest64(reflection_to_json(reflection).dump());
      absorb_tokens(transcript, reflect_entry);
      transcript.entries.push_back(std::move(reflect_entry));

      if (reflection.accepted) {
        accepted = true;
        break;
      }
      revision = RevisionInput{path, reflection.suggestions};
    }

    path.provenance.method = PlanMethod::Malpp;
    path.provenance.plan_versions = versions;
    path.provenance.accepted_by_reflection = accepted;
    path.provenance.ablations = config.ablations;
    path.provenance.seed = config.seed;
    transcript.outcome = no_reflection ? "adopted_without_reflection"
                         : accepted   ? "accepted"
                                      : "adopted_by_default";
    return SessionResult{std::move(path), std::move(transcript)};
  } catch (const Error& error) {
    transcript.outcome = std::string("aborted: ") + error.what();
    throw SessionError(error, std::move(transcript));
  }
}

SessionResult run_slmlpp(Backend& backend, const PromptLibrary& prompts,
                         const Workspace& ws, const LearnerContext& ctx,
                         const SessionConfig& config) {
  if (config.method != PlanMethod::Slmlpp) {
    throw Error(ErrorKind::Usage, "run_slmlpp requires method slmlpp");
  }
  ConstraintConfig constraints = effective_constraints(config);

  AgentTranscript transcript;
  transcript.session_id = session_id(config, ctx.profile.learner_id);
  transcript.learner_id = ctx.profile.learner_id;
  transcript.method = method_label(config);

  try {
    TranscriptEntry entry;
    entry.state = "plan";
    entry.agent_role = "slmlpp";
    entry.step = 1;
    LearningPath path = run_planner(
        backend, prompts, ctx, ws, std::nullopt, constraints, std::nullopt,
        "slmlpp/" + transcript.session_id, entry.attempts, config.max_repairs);
    entry.payload_digest = digest64(plan_to_json(path).dump());
    absorb_tokens(transcript, entry);
    transcript.entries.push_back(std::move(entry));

    path.provenance.method = PlanMethod::Slmlpp;
    path.provenance.plan_versions = 1;
    path.provenance.accepted_by_reflection = false;
    path.provenance.ablations = config.ablations;
    path.provenance.seed = config.seed;
    transcript.outcome = "adopted_without_reflection";
    return SessionResult{std::move(path), std::move(transcript)};
  } catch (const Error& error) {
    transcript.outcome = std::string("aborted: ") + error.what();
    throw SessionError(error, std::move(transcript));
  }
}

LearningPath run_rbm(const Workspace& ws, const LearnerContext& ctx,
                     const SessionConfig& config) {
  if (!config.seed) {
    throw Error(ErrorKind::Usage, "the random baseline requires a seed");
  }
  const auto& pool = ctx.recommendations.resource_ids;
  if (pool.empty()) {
    throw Error(ErrorKind::EmptyRecommendation,
                "no recommended resources for " + ctx.profile.learner_id);
  }

  Rng rng{splitmix64(*config.seed ^ fnv1a(ctx.profile.learner_id))};
  int cap = std::min<int>(kRbmMaxLen, static_cast<int>(pool.size()));
  int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cap)));

  // Partial Fisher-Yates: first n entries are a uniform sample in draw order.
  std::vector<std::string> ids = pool;
  for (int i = 0; i < n; ++i) {
    auto j = i + static_cast<int>(rng.below(ids.size() - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(n);

  LearningPath path;
  path.learner_id = ctx.profile.learner_id;
  for (int i = 0; i < n; ++i) {
    PathNode node;
    node.resource_id = ids[i];
    node.position = i + 1;
    const auto* resource = ws.find_resource(ids[i]);
    node.estimated_minutes = resource ? resource->duration_estimate : 0.0;
    path.nodes.push_back(std::move(node));
  }
  path.provenance.method = PlanMethod::Rbm;
  path.provenance.plan_versions = 1;
  path.provenance.accepted_by_reflection = false;
  path.provenance.seed = config.seed;
  return path;
}

bool path_is_feasible(const std::vector<std::string>& resource_ids,
                      const KnowledgeState& state, const Workspace& ws) {
  std::set<std::string> satisfied = mastered_points(state);
  for (const auto& resource_id : resource_ids) {
    const auto* resource = ws.find_resource(resource_id);
    if (!resource) return false;
    for (const auto& kp : resource->knowledge_ids) {
      for (const auto& prereq : ws.graph.direct_prerequisites(kp)) {
        if (!satisfied.count(prereq)) return false;
      }
    }
    for (const auto& kp : resource->knowledge_ids) satisfied.insert(kp);
  }
  return true;
}

namespace {

struct OracleSearch {
  OracleSearch(const Workspace& ws_in, const KnowledgeState& state_in,
               std::vector<const Resource*> pool_in)
      : ws(ws_in), state(state_in), pool(std::move(pool_in)) {}

  const Workspace& ws;
  const KnowledgeState& state;
  std::vector<const Resource*> pool;
  int max_len = 0;
  std::optional<double> max_total_minutes;

  std::vector<const Resource*> current;
  std::vector<bool> used;
  double current_minutes = 0;
  std::set<std::string> covered;  // mastered plus taught-so-far

  // Enumeration visits id-ascending extensions first, so equal-score paths
  // arrive in tie-break order.
  std::function<void(const std::vector<const Resource*>&)> visit;

  void run() {
    used.assign(pool.size(), false);
    covered = mastered_points(state);
    extend();
  }

  void extend() {
    if (!current.empty()) visit(current);
    if (static_cast<int>(current.size()) >= max_len) return;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (used[i]) continue;
      const Resource* resource = pool[i];
      if (max_total_minutes &&
          current_minutes + resource->duration_estimate > *max_total_minutes) {
        continue;
      }
      bool feasible = true;
      for (const auto& kp : resource->knowledge_ids) {
        for (const auto& prereq : ws.graph.direct_prerequisites(kp)) {
          if (!covered.count(prereq)) {
            feasible = false;
            break;
          }
        }
        if (!feasible) break;
      }
      if (!feasible) continue;

      used[i] = true;
      current.push_back(resource);
      current_minutes += resource->duration_estimate;
      std::vector<std::string> added;
      for (const auto& kp : resource->knowledge_ids) {
        if (covered.insert(kp).second) added.push_back(kp);
      }
      extend();
      for (const auto& kp : added) covered.erase(kp);
      current_minutes -= resource->duration_estimate;
      current.pop_back();
      used[i] = false;
    }
  }
};

std::vector<const Resource*> oracle_pool(const Workspace& ws,
                                         const LearnerContext& ctx) {
  std::vector<const Resource*> pool;
  for (const auto& resource_id : ctx.recommendations.resource_ids) {
    const auto* resource = ws.find_resource(resource_id);
    if (!resource) {
      throw Error(ErrorKind::Integrity,
                  "recommendation references unknown resource " + resource_id);
    }
    pool.push_back(resource);
  }
  std::sort(pool.begin(), pool.end(),
            [](const Resource* a, const Resource* b) { return a->id < b->id; });
  return pool;
}

}  // namespace

std::vector<std::vector<std::string>> enumerate_feasible_paths(
    const Workspace& ws, const LearnerContext& ctx, int max_len,
    std::optional<double> max_total_minutes) {
  auto pool = oracle_pool(ws, ctx);
  std::vector<std::vector<std::string>> out;
  OracleSearch search{ws, ctx.state, pool};
  search.max_len = max_len;
  search.max_total_minutes = max_total_minutes;
  search.visit = [&out](const std::vector<const Resource*>& path) {
    std::vector<std::string> ids;
    ids.reserve(path.size());
    for (const auto* resource : path) ids.push_back(resource->id);
    out.push_back(std::move(ids));
  };
  search.run();
  return out;
}

LearningPath run_oracle(const Workspace& ws, const LearnerContext& ctx,
                        const EffectivenessModel& eff, int max_len,
                        std::optional<double> max_total_minutes) {
  auto pool = oracle_pool(ws, ctx);
  if (pool.empty()) {
    throw Error(ErrorKind::EmptyRecommendation,
                "no recommended resources for " + ctx.profile.learner_id);
  }
  if (static_cast<int>(pool.size()) > kOracleMaxResources ||
      max_len > kOracleMaxLen || max_len < 1) {
    throw Error(ErrorKind::InstanceTooLarge,
                "oracle bound: |R| <= 12 and max_len in [1,6]");
  }
  for (const auto* resource : pool) {
    if (!eff.per_resource.count(resource->id)) {
      throw Error(ErrorKind::MissingEffectiveness,
                  "no effectiveness entry for " + resource->id);
    }
  }

  std::vector<std::string> best_ids;
  double best_score = -1.0;
  OracleSearch search{ws, ctx.state, pool};
  search.max_len = max_len;
  search.max_total_minutes = max_total_minutes;
  search.visit = [&](const std::vector<const Resource*>& path) {
    double score = 0;
    for (const auto* resource : path) {
      score += eff.per_resource.at(resource->id);
    }
    // Strictly-better score wins; on a tie the shorter path wins, and the
    // enumeration order already prefers smaller id sequences at equal length.
    if (score > best_score ||
        (score == best_score && path.size() < best_ids.size())) {
      best_score = score;
      best_ids.clear();
      for (const auto* resource : path) best_ids.push_back(resource->id);
    }
  };
  search.run();

  if (best_ids.empty()) {
    throw Error(ErrorKind::EmptyRecommendation,
                "no feasible path exists for " + ctx.profile.learner_id);
  }

  LearningPath path;
  path.learner_id = ctx.profile.learner_id;
  for (std::size_t i = 0; i < best_ids.size(); ++i) {
    PathNode node;
    node.resource_id = best_ids[i];
    node.position = static_cast<int>(i) + 1;
    node.estimated_minutes = ws.find_resource(best_ids[i])->duration_estimate;
    node.local_rationale = "Maximizes expected mastery gain at this step.";
    path.nodes.push_back(std::move(node));
  }
  path.global_rationale =
      "Exhaustive maximizer of cumulative effectiveness over the feasible set.";
  path.provenance.method = PlanMethod::Oracle;
  path.provenance.plan_versions = 1;
  return path;
}

}  // namespace pathplan
