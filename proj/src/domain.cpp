#include "pathplan/domain.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace pathplan {

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += ", ";
    out += ids[i];
  }
  return out;
}

}  // namespace

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Integrity: return "integrity";
    case ErrorKind::UnknownLearner: return "unknown_learner";
    case ErrorKind::InvalidMastery: return "invalid_mastery";
    case ErrorKind::MissingEffectiveness: return "missing_effectiveness";
    case ErrorKind::EmptyRecommendation: return "empty_recommendation";
    case ErrorKind::EmptyBatch: return "empty_batch";
    case ErrorKind::UndefinedLoad: return "undefined_load";
    case ErrorKind::DivisionByZero: return "division_by_zero";
    case ErrorKind::InstanceTooLarge: return "instance_too_large";
    case ErrorKind::NoJsonFound: return "no_json_found";
    case ErrorKind::SchemaViolation: return "schema_violation";
    case ErrorKind::ScriptExhausted: return "script_exhausted";
    case ErrorKind::RetriesExhausted: return "retries_exhausted";
    case ErrorKind::MissingApiKey: return "missing_api_key";
    case ErrorKind::ValidationFailedAfterRepairs: return "validation_failed_after_repairs";
    case ErrorKind::HallucinatedResource: return "hallucinated_resource";
    case ErrorKind::IncompleteContext: return "incomplete_context";
    case ErrorKind::Backend: return "backend";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

const KnowledgePoint* KnowledgeGraph::find(const std::string& id) const {
  for (const auto& point : points) {
    if (point.id == id) return &point;
  }
  return nullptr;
}

std::vector<std::string> KnowledgeGraph::direct_prerequisites(
    const std::string& id) const {
  std::vector<std::string> out;
  for (const auto& edge : prerequisites) {
    if (edge.successor_id == id) out.push_back(edge.prerequisite_id);
  }
  return out;
}

const char* to_string(MasteryStatus status) {
  switch (status) {
    case MasteryStatus::Mastered: return "mastered";
    case MasteryStatus::Weak: return "weak";
    case MasteryStatus::Unlearned: return "unlearned";
  }
  return "unlearned";
}

MasteryStatus mastery_status_from_string(const std::string& text) {
  if (text == "mastered") return MasteryStatus::Mastered;
  if (text == "weak") return MasteryStatus::Weak;
  if (text == "unlearned") return MasteryStatus::Unlearned;
  throw Error(ErrorKind::Parse, "unknown mastery status '" + text + "'");
}

const char* to_string(ResourceKind kind) {
  switch (kind) {
    case ResourceKind::Video: return "video";
    case ResourceKind::Exercise: return "exercise";
    case ResourceKind::Document: return "document";
  }
  return "video";
}

ResourceKind resource_kind_from_string(const std::string& text) {
  if (text == "video") return ResourceKind::Video;
  if (text == "exercise") return ResourceKind::Exercise;
  if (text == "document") return ResourceKind::Document;
  throw Error(ErrorKind::Parse, "unknown resource kind '" + text + "'");
}

const char* to_string(PlanMethod method) {
  switch (method) {
    case PlanMethod::Malpp: return "malpp";
    case PlanMethod::Slmlpp: return "slmlpp";
    case PlanMethod::Rbm: return "rbm";
    case PlanMethod::Oracle: return "oracle";
  }
  return "malpp";
}

PlanMethod plan_method_from_string(const std::string& text) {
  if (text == "malpp") return PlanMethod::Malpp;
  if (text == "slmlpp") return PlanMethod::Slmlpp;
  if (text == "rbm") return PlanMethod::Rbm;
  if (text == "oracle") return PlanMethod::Oracle;
  throw Error(ErrorKind::Usage, "unknown method '" + text + "'");
}

GraphValidation validate_graph(const KnowledgeGraph& graph) {
  GraphValidation result;

  std::unordered_set<std::string> ids;
  for (const auto& point : graph.points) {
    if (!ids.insert(point.id).second) {
      result.violations.push_back("duplicate knowledge point id " + point.id);
    }
  }

  std::unordered_map<std::string, std::vector<std::string>> preds;
  std::unordered_map<std::string, int> indegree;
  for (const auto& point : graph.points) indegree[point.id] = 0;
  for (const auto& edge : graph.prerequisites) {
    bool resolved = true;
    if (!ids.count(edge.prerequisite_id)) {
      result.violations.push_back("unresolved endpoint " + edge.prerequisite_id);
      resolved = false;
    }
    if (!ids.count(edge.successor_id)) {
      result.violations.push_back("unresolved endpoint " + edge.successor_id);
      resolved = false;
    }
    if (resolved) {
      preds[edge.successor_id].push_back(edge.prerequisite_id);
      ++indegree[edge.successor_id];
    }
  }

  // Kahn's algorithm over resolved edges; whatever remains sits on or behind
  // a cycle.
  std::deque<std::string> ready;
  std::unordered_map<std::string, int> remaining = indegree;
  std::unordered_map<std::string, std::vector<std::string>> succs;
  for (const auto& edge : graph.prerequisites) {
    if (ids.count(edge.prerequisite_id) && ids.count(edge.successor_id)) {
      succs[edge.prerequisite_id].push_back(edge.successor_id);
    }
  }
  for (const auto& [id, deg] : remaining) {
    if (deg == 0) ready.push_back(id);
  }
  std::size_t removed = 0;
  while (!ready.empty()) {
    std::string id = ready.front();
    ready.pop_front();
    ++removed;
    for (const auto& succ : succs[id]) {
      if (--remaining[succ] == 0) ready.push_back(succ);
    }
  }

  if (removed < remaining.size()) {
    // Extract one concrete cycle by walking predecessors inside the leftover
    // set until a node repeats.
    std::unordered_set<std::string> stuck;
    for (const auto& [id, deg] : remaining) {
      if (deg > 0) stuck.insert(id);
    }
    std::vector<std::string> walk;
    std::unordered_map<std::string, std::size_t> seen_at;
    std::string cur = *stuck.begin();
    while (!seen_at.count(cur)) {
      seen_at[cur] = walk.size();
      walk.push_back(cur);
      const auto& ps = preds[cur];
      std::string next;
      for (const auto& p : ps) {
        if (stuck.count(p)) {
          if (next.empty() || p < next) next = p;
        }
      }
      cur = next;
    }
    std::vector<std::string> cycle(walk.begin() + seen_at[cur], walk.end());
    std::sort(cycle.begin(), cycle.end());
    result.violations.push_back("cycle {" + join_ids(cycle) + "}");
  }

  result.ok = result.violations.empty();
  return result;
}

std::map<std::string, MasteryStatus> derive_status(
    const std::map<std::string, double>& mastery,
    const std::set<std::string>& studied, double weak_threshold) {
  std::map<std::string, MasteryStatus> status;
  std::set<std::string> all;
  for (const auto& [id, value] : mastery) {
    if (value < 0.0 || value > 1.0) {
      throw Error(ErrorKind::InvalidMastery,
                  "mastery for " + id + " outside [0,1]");
    }
    all.insert(id);
  }
  all.insert(studied.begin(), studied.end());
  for (const auto& id : all) {
    if (!studied.count(id)) {
      status[id] = MasteryStatus::Unlearned;
      continue;
    }
    auto it = mastery.find(id);
    double value = it == mastery.end() ? 0.0 : it->second;
    status[id] = value < weak_threshold ? MasteryStatus::Weak
                                        : MasteryStatus::Mastered;
  }
  return status;
}

double score_path(const LearningPath& path, const EffectivenessModel& eff) {
  double total = 0.0;
  for (const auto& node : path.nodes) {
    auto it = eff.per_resource.find(node.resource_id);
    if (it == eff.per_resource.end()) {
      throw Error(ErrorKind::MissingEffectiveness,
                  "no effectiveness entry for " + node.resource_id);
    }
    total += it->second;
  }
  return total;
}

std::map<std::string, double> chain_depth_difficulties(
    const KnowledgeGraph& graph) {
  std::map<std::string, double> out;
  std::unordered_map<std::string, int> depth;

  // Memoized longest-chain depth; the graph is validated acyclic upstream.
  std::function<int(const std::string&)> depth_of =
      [&](const std::string& id) -> int {
    auto it = depth.find(id);
    if (it != depth.end()) return it->second;
    depth[id] = 0;  // breaks accidental cycles instead of recursing forever
    int best = 0;
    for (const auto& pre : graph.direct_prerequisites(id)) {
      best = std::max(best, 1 + depth_of(pre));
    }
    depth[id] = best;
    return best;
  };

  for (const auto& point : graph.points) {
    out[point.id] = 1.0 + depth_of(point.id);
  }
  return out;
}

double resource_difficulty(const Resource& resource,
                           const KnowledgeGraph& graph) {
  double best = 0.0;
  for (const auto& kp : resource.knowledge_ids) {
    if (const auto* point = graph.find(kp)) {
      best = std::max(best, point->difficulty);
    }
  }
  return best;
}

EffectivenessModel mastery_gap_effectiveness(
    const KnowledgeState& state, const std::vector<Resource>& resources,
    double target_mastery) {
  EffectivenessModel model;
  for (const auto& resource : resources) {
    double gain = 0.0;
    for (const auto& kp : resource.knowledge_ids) {
      auto it = state.mastery.find(kp);
      double mastery = it == state.mastery.end() ? 0.0 : it->second;
      gain += std::max(0.0, target_mastery - mastery);
    }
    model.per_resource[resource.id] = gain;
  }
  return model;
}

std::vector<std::string> path_structure_violations(const LearningPath& path,
                                                   int max_path_length) {
  std::vector<std::string> violations;
  if (path.nodes.empty()) {
    violations.push_back("path is empty");
    return violations;
  }
  if (static_cast<int>(path.nodes.size()) > max_path_length) {
    std::ostringstream os;
    os << "path length " << path.nodes.size() << " exceeds maximum "
       << max_path_length;
    violations.push_back(os.str());
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < path.nodes.size(); ++i) {
    const auto& node = path.nodes[i];
    if (node.position != static_cast<int>(i) + 1) {
      std::ostringstream os;
      os << "position " << node.position << " at index " << i
         << " is not contiguous";
      violations.push_back(os.str());
    }
    if (!seen.insert(node.resource_id).second && !node.repeat) {
      violations.push_back("duplicate resource " + node.resource_id +
                           " without repeat marker");
    }
  }
  return violations;
}

}  // namespace pathplan
