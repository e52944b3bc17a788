#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pathplan/errors.hpp"

namespace pathplan {

// Operational defaults shared across modules. All of them are configurable at
// the call sites that use them.
inline constexpr double kDefaultRiskThreshold = 0.5;
inline constexpr double kDefaultWeakThreshold = 0.6;
inline constexpr int kDefaultListLength = 20;
inline constexpr int kDefaultMaxPathLength = 10;
inline constexpr int kDefaultMaxPlanVersions = 3;
inline constexpr double kDefaultTargetMastery = 1.0;

struct Demographics {
  int age = 0;
  std::string gender;
  std::string grade;
  std::string major;
};

struct LearnerProfile {
  std::string learner_id;
  std::string course_id;
  std::optional<Demographics> demographics;
  std::vector<double> features;
};

struct RiskAlert {
  std::string learner_id;
  int week = 0;           // 1-based alert week
  double probability = 0;  // in (threshold, 1]
};

struct KnowledgePoint {
  std::string id;
  std::string name;
  double difficulty = 1.0;  // hierarchical level, > 0
  std::string objective;
};

struct PrerequisiteEdge {
  std::string prerequisite_id;
  std::string successor_id;
};

struct KnowledgeGraph {
  std::vector<KnowledgePoint> points;
  std::vector<PrerequisiteEdge> prerequisites;

  const KnowledgePoint* find(const std::string& id) const;
  bool contains(const std::string& id) const { return find(id) != nullptr; }
  // Direct prerequisite ids of one knowledge point.
  std::vector<std::string> direct_prerequisites(const std::string& id) const;
};

enum class MasteryStatus { Mastered, Weak, Unlearned };

const char* to_string(MasteryStatus status);
MasteryStatus mastery_status_from_string(const std::string& text);

struct KnowledgeState {
  std::string learner_id;
  int week = 0;
  std::map<std::string, double> mastery;          // knowledge_id -> [0,1]
  std::map<std::string, MasteryStatus> status;    // every graph point
};

enum class ResourceKind { Video, Exercise, Document };

const char* to_string(ResourceKind kind);
ResourceKind resource_kind_from_string(const std::string& text);

// One per-learner total of minutes spent on a resource (a T_{i,j} sample).
struct TimeRecord {
  std::string learner_id;
  double minutes = 0;
};

struct Resource {
  std::string id;
  std::string title;
  std::string description;
  ResourceKind kind = ResourceKind::Video;
  double duration_estimate = 0;            // authored, minutes, > 0
  std::vector<std::string> knowledge_ids;  // nonempty, subset of graph
  std::vector<TimeRecord> time_records;    // derived from events at load time
};

struct RecommendationList {
  std::string learner_id;
  std::vector<std::string> resource_ids;  // ordered, no duplicates
};

struct PathNode {
  std::string resource_id;
  int position = 0;  // 1-based, contiguous
  std::string local_rationale;
  double estimated_minutes = 0;
  // Marks a deliberate second session on a resource that appears earlier in
  // the path; duplicates without it are invalid.
  bool repeat = false;
};

enum class PlanMethod { Malpp, Slmlpp, Rbm, Oracle };

const char* to_string(PlanMethod method);
PlanMethod plan_method_from_string(const std::string& text);

struct Provenance {
  PlanMethod method = PlanMethod::Malpp;
  int plan_versions = 1;
  bool accepted_by_reflection = false;
  std::set<std::string> ablations;
  std::optional<std::uint64_t> seed;
};

struct LearningPath {
  std::string learner_id;
  std::vector<PathNode> nodes;
  std::string global_rationale;
  Provenance provenance;
};

struct EffectivenessModel {
  std::map<std::string, double> per_resource;  // resource_id -> E >= 0
};

// Everything known about one learner at alert time.
struct LearnerContext {
  LearnerProfile profile;
  RiskAlert alert;
  KnowledgeState state;
  RecommendationList recommendations;
  // Measured cognitive capacity CL_student, absent for learners with no
  // studied resources.
  std::optional<double> capacity_minutes;
};

struct GraphValidation {
  bool ok = false;
  std::vector<std::string> violations;
};

// Checks that all edge endpoints resolve and the graph is acyclic. Violations
// are values, not failures: they name the dangling endpoint or the cycle.
GraphValidation validate_graph(const KnowledgeGraph& graph);

// Unlearned if not studied, Weak if studied below the threshold, Mastered
// otherwise. Throws InvalidMastery for values outside [0,1].
std::map<std::string, MasteryStatus> derive_status(
    const std::map<std::string, double>& mastery,
    const std::set<std::string>& studied, double weak_threshold);

// Cumulative effectiveness of the path: sum of per-node E values, counting
// repeated resources once per occurrence.
double score_path(const LearningPath& path, const EffectivenessModel& eff);

// Default difficulty when ingestion supplies none: 1 + longest
// prerequisite-chain depth. Requires an acyclic graph.
std::map<std::string, double> chain_depth_difficulties(const KnowledgeGraph& graph);

// Maximum difficulty over the resource's knowledge points.
double resource_difficulty(const Resource& resource, const KnowledgeGraph& graph);

// Expected-mastery-gain effectiveness: per resource, the sum over its
// knowledge points of max(0, target - mastery), with unlearned points at 0.
EffectivenessModel mastery_gap_effectiveness(
    const KnowledgeState& state, const std::vector<Resource>& resources,
    double target_mastery = kDefaultTargetMastery);

// Structural path problems: non-contiguous positions, duplicates lacking the
// repeat marker, or length above the cap. Empty means well-formed.
std::vector<std::string> path_structure_violations(const LearningPath& path,
                                                   int max_path_length);

}  // namespace pathplan
