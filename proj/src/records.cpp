#include "pathplan/records.hpp"

namespace pathplan {

using json = nlohmann::json;

json alert_to_json(const RiskAlert& alert) {
  return json{{"learner_id", alert.learner_id},
              {"week", alert.week},
              {"probability", alert.probability}};
}

RiskAlert alert_from_json(const json& record) {
  RiskAlert alert;
  alert.learner_id = record.at("learner_id").get<std::string>();
  alert.week = record.at("week").get<int>();
  alert.probability = record.at("probability").get<double>();
  return alert;
}

json state_record_to_json(const KnowledgeState& state) {
  json status = json::object();
  for (const auto& [kp, s] : state.status) status[kp] = to_string(s);
  return json{{"learner_id", state.learner_id},
              {"week", state.week},
              {"mastery", state.mastery},
              {"status", status}};
}

KnowledgeState state_record_from_json(const json& record) {
  KnowledgeState state;
  state.learner_id = record.at("learner_id").get<std::string>();
  state.week = record.at("week").get<int>();
  for (const auto& [kp, value] : record.at("mastery").items()) {
    state.mastery[kp] = value.get<double>();
  }
  for (const auto& [kp, value] : record.at("status").items()) {
    state.status[kp] = mastery_status_from_string(value.get<std::string>());
  }
  return state;
}

json recommendation_to_json(const RecommendationList& list) {
  return json{{"learner_id", list.learner_id},
              {"resource_ids", list.resource_ids}};
}

RecommendationList recommendation_from_json(const json& record) {
  RecommendationList list;
  list.learner_id = record.at("learner_id").get<std::string>();
  for (const auto& id : record.at("resource_ids")) {
    list.resource_ids.push_back(id.get<std::string>());
  }
  return list;
}

json path_record_to_json(const LearningPath& path) {
  json nodes = json::array();
  for (const auto& node : path.nodes) {
    nodes.push_back(json{{"resource_id", node.resource_id},
                         {"position", node.position},
                         {"local_rationale", node.local_rationale},
                         {"estimated_minutes", node.estimated_minutes},
                         {"repeat", node.repeat}});
  }
  json provenance{{"method", to_string(path.provenance.method)},
                  {"plan_versions", path.provenance.plan_versions},
                  {"accepted_by_reflection", path.provenance.accepted_by_reflection},
                  {"ablations", path.provenance.ablations}};
  provenance["seed"] = path.provenance.seed
                           ? json(*path.provenance.seed)
                           : json(nullptr);
  return json{{"learner_id", path.learner_id},
              {"nodes", nodes},
              {"global_rationale", path.global_rationale},
              {"provenance", provenance}};
}

LearningPath path_record_from_json(const json& record) {
  LearningPath path;
  path.learner_id = record.at("learner_id").get<std::string>();
  for (const auto& item : record.at("nodes")) {
    PathNode node;
    node.resource_id = item.at("resource_id").get<std::string>();
    node.position = item.at("position").get<int>();
    node.local_rationale = item.value("local_rationale", "");
    node.estimated_minutes = item.value("estimated_minutes", 0.0);
    node.repeat = item.value("repeat", false);
    path.nodes.push_back(std::move(node));
  }
  path.global_rationale = record.value("global_rationale", "");
  if (record.contains("provenance")) {
    const auto& provenance = record.at("provenance");
    path.provenance.method =
        plan_method_from_string(provenance.value("method", "malpp"));
    path.provenance.plan_versions = provenance.value("plan_versions", 1);
    path.provenance.accepted_by_reflection =
        provenance.value("accepted_by_reflection", false);
    for (const auto& flag : provenance.value("ablations", json::array())) {
      path.provenance.ablations.insert(flag.get<std::string>());
    }
    if (provenance.contains("seed") && !provenance.at("seed").is_null()) {
      path.provenance.seed = provenance.at("seed").get<std::uint64_t>();
    }
  }
  return path;
}

}  // namespace pathplan
