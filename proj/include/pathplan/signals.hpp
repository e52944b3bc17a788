#pragma once

#include <optional>
#include <string>

#include "pathplan/workspace.hpp"

namespace pathplan {

// Earliest week whose probability strictly exceeds the threshold, or nothing.
std::optional<RiskAlert> detect_risk(const RiskSeries& series,
                                     double threshold = kDefaultRiskThreshold);

// Fallback weekly risk estimate for workspaces without risk.jsonl: grows with
// the learner's wrong-answer ratio and weeks of inactivity. Empty series for
// learners with no events.
RiskSeries reference_risk_series(const Workspace& ws,
                                 const std::string& learner_id);

// Knowledge state at the start of the given week, from events with
// day < 7 * week only. Mastery is the recency-weighted correct ratio (weight
// halves per week of age); studied-but-unanswered points sit at 0.
KnowledgeState trace_knowledge(const Workspace& ws,
                               const std::string& learner_id, int week,
                               double weak_threshold = kDefaultWeakThreshold);

// Top-n resources by knowledge-gap coverage. Resources whose every knowledge
// point is mastered are excluded; ties break toward the smaller resource id.
RecommendationList recommend(const Workspace& ws, const std::string& learner_id,
                             const KnowledgeState& state,
                             int n = kDefaultListLength);

}  // namespace pathplan
