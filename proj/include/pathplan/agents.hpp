#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathplan/domain.hpp"
#include "pathplan/gateway.hpp"
#include "pathplan/workspace.hpp"

namespace pathplan {

struct ConstraintConfig {
  bool include_clt = true;
  bool include_zpd = true;
  int max_path_length = kDefaultMaxPathLength;
  // Acceptable average node load, as fractions of the learner's capacity.
  double band_low = 0.8;
  double band_high = 1.2;
};

struct DiagnosticReport {
  std::vector<std::string> mastered;
  std::vector<std::string> weak;
  std::vector<std::string> unlearned;
  std::string preferences;
  std::string risk_summary;
};

enum class CltVerdict { Pass, Overload, Underload };
enum class ZpdVerdict { Pass, NonProgressive };

const char* to_string(CltVerdict verdict);
const char* to_string(ZpdVerdict verdict);

struct Suggestion {
  enum class Category { Clt, Zpd, Other };
  Category category = Category::Other;
  std::string description;
  std::vector<int> positions;  // 1-based path positions
};

struct ReflectionResult {
  bool accepted = false;
  CltVerdict clt_verdict = CltVerdict::Pass;
  ZpdVerdict zpd_verdict = ZpdVerdict::Pass;
  std::vector<Suggestion> suggestions;
};

struct RevisionInput {
  LearningPath previous;
  std::vector<Suggestion> suggestions;
};

enum class SchemaId { Report, Plan, Reflection };

// Payload (de)serialization; parse validates nothing beyond shape, the
// semantic invariants live with the run_* operations.
nlohmann::json report_to_json(const DiagnosticReport& report);
DiagnosticReport report_from_json(const nlohmann::json& payload);
nlohmann::json reflection_to_json(const ReflectionResult& result);
ReflectionResult reflection_from_json(const nlohmann::json& payload);
nlohmann::json plan_to_json(const LearningPath& path);
// Fills nodes and global_rationale; provenance stays with the caller.
LearningPath plan_from_json(const nlohmann::json& payload,
                            const std::string& learner_id);

// Loads the prompt templates and output schemas from an asset directory
// (templates/*.txt, templates/blocks/*.txt, schemas/*.json) and renders the
// three dynamic prompts. Builders are pure: same inputs, same bytes.
class PromptLibrary {
 public:
  static PromptLibrary load(const std::filesystem::path& asset_dir);

  ChatRequest build_analytics_prompt(const LearnerContext& ctx,
                                     const Workspace& ws,
                                     const std::string& tag) const;
  ChatRequest build_planning_prompt(
      const LearnerContext& ctx, const Workspace& ws,
      const std::optional<DiagnosticReport>& report,
      const ConstraintConfig& constraints,
      const std::optional<RevisionInput>& revision,
      const std::string& tag) const;
  ChatRequest build_reflection_prompt(const LearnerContext& ctx,
                                      const Workspace& ws,
                                      const LearningPath& path,
                                      const ConstraintConfig& constraints,
                                      const std::string& tag) const;

  const nlohmann::json& schema(SchemaId id) const;

  // Raw block texts, exposed so ablation tests can assert byte-exact removal.
  const std::string& planner_clt_block() const { return clt_planner_; }
  const std::string& planner_zpd_block() const { return zpd_planner_; }
  const std::string& reflector_clt_block() const { return clt_reflector_; }
  const std::string& reflector_zpd_block() const { return zpd_reflector_; }

 private:
  std::string analytics_, planner_, reflector_;
  std::string clt_planner_, zpd_planner_, clt_reflector_, zpd_reflector_;
  std::string report_block_, revision_block_;
  nlohmann::json report_schema_, plan_schema_, reflection_schema_;
};

// The three agent calls. Each runs complete_validated against its schema plus
// the role's semantic invariants, appending every attempt to `attempts`.
DiagnosticReport run_analytics(Backend& backend, const PromptLibrary& prompts,
                               const LearnerContext& ctx, const Workspace& ws,
                               const std::string& tag,
                               std::vector<AttemptRecord>& attempts,
                               int max_repairs = kDefaultMaxRepairs);

LearningPath run_planner(Backend& backend, const PromptLibrary& prompts,
                         const LearnerContext& ctx, const Workspace& ws,
                         const std::optional<DiagnosticReport>& report,
                         const ConstraintConfig& constraints,
                         const std::optional<RevisionInput>& revision,
                         const std::string& tag,
                         std::vector<AttemptRecord>& attempts,
                         int max_repairs = kDefaultMaxRepairs);

ReflectionResult run_reflector(Backend& backend, const PromptLibrary& prompts,
                               const LearnerContext& ctx, const Workspace& ws,
                               const LearningPath& path,
                               const ConstraintConfig& constraints,
                               const std::string& tag,
                               std::vector<AttemptRecord>& attempts,
                               int max_repairs = kDefaultMaxRepairs);

}  // namespace pathplan
