#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathplan/agents.hpp"

namespace pathplan {

// Recognized ablation flags (meaningful for the agentic method only).
inline constexpr const char* kAblateNoAnalytics = "no_analytics";
inline constexpr const char* kAblateNoReflection = "no_reflection";
inline constexpr const char* kAblateNoClt = "no_clt";
inline constexpr const char* kAblateNoZpd = "no_zpd";

struct SessionConfig {
  PlanMethod method = PlanMethod::Malpp;
  std::set<std::string> ablations;
  int max_plan_versions = kDefaultMaxPlanVersions;
  std::optional<std::uint64_t> seed;  // required for the random baseline
  ConstraintConfig constraints;
  int max_repairs = kDefaultMaxRepairs;
};

// Label used for grouping paths and naming output directories, e.g.
// "malpp+no_clt+no_zpd". Ablations are sorted for stability.
std::string method_label(const SessionConfig& config);

struct TranscriptEntry {
  std::string state;       // analyze | plan | reflect
  std::string agent_role;  // analytics | planner | reflector | slmlpp
  std::vector<AttemptRecord> attempts;
  std::string payload_digest;  // of the accepted payload, empty on failure
  int step = 0;                // logical order within the session
};

struct AgentTranscript {
  std::string session_id;
  std::string learner_id;
  std::string method;  // method_label of the session
  std::vector<TranscriptEntry> entries;
  std::string outcome;  // accepted | adopted_by_default | ... | aborted: ...
  long total_prompt_tokens = 0;
  long total_completion_tokens = 0;
};

nlohmann::json transcript_to_json(const AgentTranscript& transcript);

struct SessionResult {
  LearningPath path;
  AgentTranscript transcript;
};

// The planning-reflection-revision loop: up to max_plan_versions plan
// versions, adopting the last one by default when reflection never accepts.
// Agent errors abort the session but the thrown SessionError keeps the
// transcript recorded so far.
SessionResult run_malpp(Backend& backend, const PromptLibrary& prompts,
                        const Workspace& ws, const LearnerContext& ctx,
                        const SessionConfig& config);

// Single-prompt baseline: one validated completion, no report, no reflection.
SessionResult run_slmlpp(Backend& backend, const PromptLibrary& prompts,
                         const Workspace& ws, const LearnerContext& ctx,
                         const SessionConfig& config);

// Random baseline: N ~ Uniform{1..min(10,|R|)} distinct resources in sampled
// order, no rationales.
LearningPath run_rbm(const Workspace& ws, const LearnerContext& ctx,
                     const SessionConfig& config);

// True when every node's prerequisite knowledge points are mastered in the
// learner's state or covered by an earlier node.
bool path_is_feasible(const std::vector<std::string>& resource_ids,
                      const KnowledgeState& state, const Workspace& ws);

// Every prerequisite-feasible ordered duplicate-free subset of the
// recommendations, up to max_len resources. Exposed for enumeration checks.
std::vector<std::vector<std::string>> enumerate_feasible_paths(
    const Workspace& ws, const LearnerContext& ctx, int max_len,
    std::optional<double> max_total_minutes = std::nullopt);

// Exhaustive maximizer of cumulative effectiveness over the feasible set.
// Ties prefer shorter paths, then the lexicographically smaller id sequence.
// Bounded to |R| <= 12 and max_len <= 6; beyond that throws InstanceTooLarge.
LearningPath run_oracle(const Workspace& ws, const LearnerContext& ctx,
                        const EffectivenessModel& eff, int max_len,
                        std::optional<double> max_total_minutes = std::nullopt);

// Carries the partial transcript of a session that died mid-flight.
class SessionError : public Error {
 public:
  SessionError(Error cause, AgentTranscript transcript)
      : Error(cause.kind(), cause.what()), transcript_(std::move(transcript)) {}

  const AgentTranscript& transcript() const { return transcript_; }

 private:
  AgentTranscript transcript_;
};

}  // namespace pathplan
