#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pathplan/workspace.hpp"

namespace pathplan {

// The printed KSC formula divides the |P|-1 adjacent-pair indicators by |P|,
// so a perfectly increasing path tops out at (|P|-1)/|P|. AsWritten keeps
// that denominator; Normalized divides by |P|-1 instead.
enum class KscMode { AsWritten, Normalized };

const char* to_string(KscMode mode);
KscMode ksc_mode_from_string(const std::string& text);

struct CognitiveLoadProfile {
  double cl_int = 0;      // mean minutes per studied resource
  double cl_ger = 0;      // mean daily forum minutes over the active span
  double cl_ext = 0;      // environment constant
  double cl_student = 0;  // sum of the three
};

// Average number of resources per path.
double apl(const std::vector<LearningPath>& paths);

// Mean over paths of the per-path mean resource duration (a mean of means,
// not a pooled mean). Durations prefer the empirical per-resource time,
// falling back to the authored estimate.
double ald(const std::vector<LearningPath>& paths, const Workspace& ws);

// Throws UndefinedLoad when the learner studied nothing.
CognitiveLoadProfile student_load(const Workspace& ws,
                                  const std::string& learner_id,
                                  double cl_ext);

struct PathLoad {
  double minutes = 0;
  int fallback_nodes = 0;  // nodes priced by authored estimate, not samples
};

// Mean over path nodes of the resource's average historical time.
PathLoad path_load(const LearningPath& path, const Workspace& ws);

// Signed per-learner misalignment (capacity - load) / capacity.
double signed_misalignment(double cl_student, double cl_path);

struct ClmrResult {
  double aggregate = 0;               // mean |signed|, in [0,1]
  std::vector<double> signed_values;  // one per input pair
};

// Pairs are (cl_student, cl_path); every capacity must be positive, the
// exclusion of zero-capacity learners happens upstream.
ClmrResult clmr(const std::vector<std::pair<double, double>>& pairs);

double ksc_path(const LearningPath& path, const Workspace& ws, KscMode mode);
double ksc(const std::vector<LearningPath>& paths, const Workspace& ws,
           KscMode mode);

struct EvaluationConfig {
  KscMode ksc_mode = KscMode::AsWritten;
  double cl_ext = 0.0;
};

struct MethodRow {
  std::string method;
  double apl = 0;
  double ald_minutes = 0;
  double ksc_percent = 0;
  std::optional<double> clmr_percent;  // absent when every learner is excluded
  int n_paths = 0;
  int n_excluded_learners = 0;
  int load_fallback_nodes = 0;
};

struct PathDetail {
  std::string method;
  std::string learner_id;
  int length = 0;
  double ald_minutes = 0;
  double ksc = 0;
  std::optional<double> clmr_signed;
  int fallback_nodes = 0;
};

struct EvaluationReport {
  EvaluationConfig config;
  std::vector<MethodRow> rows;
  std::vector<PathDetail> paths;
};

EvaluationReport evaluate_batch(
    const Workspace& ws,
    const std::map<std::string, std::vector<LearningPath>>& by_method,
    const EvaluationConfig& config);

// Three renderings with identical numeric content: aligned text (2 decimals,
// plus Table-5-style deltas against the plain "malpp" row when ablation rows
// exist), CSV, and full-precision JSON.
std::string render_text(const EvaluationReport& report);
std::string render_csv(const EvaluationReport& report);
nlohmann::json render_json(const EvaluationReport& report);
EvaluationReport evaluation_from_json(const nlohmann::json& record);

}  // namespace pathplan
