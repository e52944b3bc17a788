#include "pathplan/signals.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace pathplan {

namespace {

int week_of_day(int day) { return (day - 1) / 7 + 1; }

// Knowledge points an event speaks about: its own list when present,
// otherwise everything its resource covers.
std::vector<std::string> event_knowledge(const Workspace& ws,
                                         const InteractionEvent& event) {
  if (!event.knowledge_ids.empty()) return event.knowledge_ids;
  if (event.resource_id) {
    if (const auto* resource = ws.find_resource(*event.resource_id)) {
      return resource->knowledge_ids;
    }
  }
  return {};
}

}  // namespace

std::optional<RiskAlert> detect_risk(const RiskSeries& series, double threshold) {
  if (threshold <= 0.0 || threshold >= 1.0) {
    throw Error(ErrorKind::Usage, "risk threshold must sit inside (0,1)");
  }
  for (std::size_t i = 0; i < series.weekly.size(); ++i) {
    if (series.weekly[i] > threshold) {
      return RiskAlert{series.learner_id, static_cast<int>(i) + 1,
                       series.weekly[i]};
    }
  }
  return std::nullopt;
}

RiskSeries reference_risk_series(const Workspace& ws,
                                 const std::string& learner_id) {
  if (!ws.find_profile(learner_id)) {
    throw Error(ErrorKind::UnknownLearner, "unknown learner " + learner_id);
  }
  RiskSeries series;
  series.learner_id = learner_id;
  int last_week = 0;
  for (const auto& event : ws.events) {
    if (event.learner_id == learner_id) {
      last_week = std::max(last_week, week_of_day(event.day));
    }
  }
  for (int w = 1; w <= last_week; ++w) {
    int answers = 0, wrong = 0;
    bool active = false;
    for (const auto& event : ws.events) {
      if (event.learner_id != learner_id) continue;
      if (week_of_day(event.day) == w) active = true;
      if (event.kind == EventKind::AnswerLog && event.day <= 7 * w) {
        ++answers;
        if (event.correct && !*event.correct) ++wrong;
      }
    }
    double wrong_ratio = answers == 0 ? 0.5 : static_cast<double>(wrong) / answers;
    double p = 0.2 + 0.6 * wrong_ratio + (active ? 0.0 : 0.2);
    series.weekly.push_back(std::clamp(p, 0.0, 1.0));
  }
  return series;
}

KnowledgeState trace_knowledge(const Workspace& ws,
                               const std::string& learner_id, int week,
                               double weak_threshold) {
  if (!ws.find_profile(learner_id)) {
    throw Error(ErrorKind::UnknownLearner, "unknown learner " + learner_id);
  }
  if (week < 1) throw Error(ErrorKind::Usage, "week must be >= 1");

  const int cutoff_day = 7 * week;  // exclusive
  std::set<std::string> studied;
  std::map<std::string, double> weighted_correct;
  std::map<std::string, double> weight_total;

  for (const auto& event : ws.events) {
    if (event.learner_id != learner_id || event.day >= cutoff_day) continue;
    if (event.kind == EventKind::ForumComment) continue;
    auto kps = event_knowledge(ws, event);
    for (const auto& kp : kps) studied.insert(kp);
    if (event.kind != EventKind::AnswerLog || !event.correct) continue;
    // Most recent completed week has age 0; each older week halves the weight.
    double age = static_cast<double>(week - 1 - week_of_day(event.day));
    double weight = std::pow(2.0, -age);
    for (const auto& kp : kps) {
      weight_total[kp] += weight;
      if (*event.correct) weighted_correct[kp] += weight;
    }
  }

  KnowledgeState state;
  state.learner_id = learner_id;
  state.week = week;
  for (const auto& kp : studied) {
    auto it = weight_total.find(kp);
    state.mastery[kp] =
        it == weight_total.end() || it->second == 0.0
            ? 0.0
            : weighted_correct[kp] / it->second;
  }
  // Restrict to knowledge points the graph actually defines.
  for (auto it = state.mastery.begin(); it != state.mastery.end();) {
    if (!ws.graph.contains(it->first)) {
      studied.erase(it->first);
      it = state.mastery.erase(it);
    } else {
      ++it;
    }
  }
  std::map<std::string, double> full = state.mastery;
  for (const auto& point : ws.graph.points) {
    if (!full.count(point.id)) full[point.id] = 0.0;
  }
  state.status = derive_status(full, studied, weak_threshold);
  return state;
}

RecommendationList recommend(const Workspace& ws, const std::string& learner_id,
                             const KnowledgeState& state, int n) {
  if (n < 1) throw Error(ErrorKind::Usage, "recommendation length must be >= 1");
  if (!ws.find_profile(learner_id)) {
    throw Error(ErrorKind::UnknownLearner, "unknown learner " + learner_id);
  }

  struct Ranked {
    double gap;
    const Resource* resource;
  };
  std::vector<Ranked> ranked;
  for (const auto& resource : ws.resources) {
    bool all_mastered = true;
    double gap = 0.0;
    for (const auto& kp : resource.knowledge_ids) {
      auto status = state.status.find(kp);
      if (status == state.status.end() ||
          status->second != MasteryStatus::Mastered) {
        all_mastered = false;
      }
      auto mastery = state.mastery.find(kp);
      gap += 1.0 - (mastery == state.mastery.end() ? 0.0 : mastery->second);
    }
    if (all_mastered) continue;
    ranked.push_back(Ranked{gap, &resource});
  }
  if (ranked.empty()) {
    throw Error(ErrorKind::EmptyRecommendation,
                "no resource addresses a knowledge gap for " + learner_id);
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.gap != b.gap) return a.gap > b.gap;
    return a.resource->id < b.resource->id;
  });

  RecommendationList list;
  list.learner_id = learner_id;
  for (const auto& entry : ranked) {
    if (static_cast<int>(list.resource_ids.size()) >= n) break;
    list.resource_ids.push_back(entry.resource->id);
  }
  return list;
}

}  // namespace pathplan
