#pragma once

#include <json.hpp>

#include "pathplan/domain.hpp"

namespace pathplan {

// Wire formats for the pipeline and planning outputs: alerts.jsonl lines,
// states/<learner>.json, recs/<learner>.json, paths/<method>/<learner>.json.

nlohmann::json alert_to_json(const RiskAlert& alert);
RiskAlert alert_from_json(const nlohmann::json& record);

nlohmann::json state_record_to_json(const KnowledgeState& state);
KnowledgeState state_record_from_json(const nlohmann::json& record);

nlohmann::json recommendation_to_json(const RecommendationList& list);
RecommendationList recommendation_from_json(const nlohmann::json& record);

nlohmann::json path_record_to_json(const LearningPath& path);
LearningPath path_record_from_json(const nlohmann::json& record);

}  // namespace pathplan
