#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pathplan/domain.hpp"

namespace pathplan {

enum class EventKind { VideoView, AnswerLog, ForumComment };

const char* to_string(EventKind kind);
EventKind event_kind_from_string(const std::string& text);

struct InteractionEvent {
  std::string learner_id;
  EventKind kind = EventKind::VideoView;
  std::optional<std::string> resource_id;   // required for views and answers
  std::vector<std::string> knowledge_ids;   // optional override
  double minutes = 0;                       // >= 0
  int day = 1;                              // 1-based day index
  std::optional<bool> correct;              // answers only
};

struct RiskSeries {
  std::string learner_id;
  std::vector<double> weekly;  // index 0 = week 1, values in [0,1]
};

struct Manifest {
  int schema_version = 1;
  std::vector<std::string> courses;
};

// A fully loaded, immutable course workspace. Resources carry their derived
// per-learner time totals after finalize().
struct Workspace {
  Manifest manifest;
  std::vector<LearnerProfile> profiles;
  KnowledgeGraph graph;
  std::vector<Resource> resources;
  std::vector<InteractionEvent> events;
  std::vector<RiskSeries> risk;  // optional risk.jsonl

  const LearnerProfile* find_profile(const std::string& learner_id) const;
  const Resource* find_resource(const std::string& resource_id) const;
  const RiskSeries* find_risk(const std::string& learner_id) const;

  // Rebuilds lookup indexes and per-resource time records. Loaders and
  // generators call this; call it again after mutating a copy in tests.
  void finalize();

 private:
  std::map<std::string, std::size_t> profile_index_;
  std::map<std::string, std::size_t> resource_index_;
  std::map<std::string, std::size_t> risk_index_;
};

// Referential-integrity check over an assembled workspace; returns messages
// prefixed with "<file>:<line>" where the offending record came from a file.
std::vector<std::string> validate_workspace(const Workspace& ws);

// Reads the five canonical files (plus optional risk.jsonl) from a directory.
// Throws Parse on malformed lines and Integrity on dangling references, both
// naming file and line.
Workspace load_workspace(const std::filesystem::path& dir);

// Writes the canonical files. save_workspace(load_workspace(dir)) reproduces
// dir byte for byte on workspaces this module wrote.
void save_workspace(const Workspace& ws, const std::filesystem::path& dir);

struct ResourceTimeStat {
  double mean_minutes = 0;
  int sample_count = 0;  // number of learners with recorded time
};

// Average historical time per resource: mean over learners of their total
// minutes on it. Resources nobody touched are absent.
std::map<std::string, ResourceTimeStat> resource_time_stats(const Workspace& ws);

struct LearnerTimeStats {
  std::map<std::string, double> per_resource_minutes;  // T_{ij} totals
  std::vector<double> forum_minutes_by_day;            // span of active days
  int first_day = 0;
  int active_days = 0;  // d: calendar span, 0 when the learner has no events
};

LearnerTimeStats learner_time_stats(const Workspace& ws,
                                    const std::string& learner_id);

struct SynthSpec {
  int learners = 1;
  int resources = 1;
  int knowledge_points = 1;
  std::uint64_t seed = 0;
};

// Deterministic synthetic cohort: acyclic graph, positive event minutes,
// per-learner weekly risk series. Identical spec -> byte-identical files.
Workspace synth_cohort(const SynthSpec& spec);

}  // namespace pathplan
