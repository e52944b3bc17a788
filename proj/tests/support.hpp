#pragma once

// Shared fixture builders for the unit and acceptance suites.

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pathplan/workspace.hpp"

namespace testsupport {

using namespace pathplan;

inline KnowledgePoint kp(const std::string& id, double difficulty) {
  KnowledgePoint point;
  point.id = id;
  point.name = "name " + id;
  point.difficulty = difficulty;
  point.objective = "learn " + id;
  return point;
}

inline Resource resource(const std::string& id,
                         std::vector<std::string> knowledge_ids,
                         double duration = 5.0,
                         ResourceKind kind = ResourceKind::Video) {
  Resource r;
  r.id = id;
  r.title = "title " + id;
  r.description = "about " + id;
  r.kind = kind;
  r.duration_estimate = duration;
  r.knowledge_ids = std::move(knowledge_ids);
  return r;
}

inline LearnerProfile profile(const std::string& id,
                              const std::string& course = "course-1") {
  LearnerProfile p;
  p.learner_id = id;
  p.course_id = course;
  p.features = {0.1, 0.2, 0.3};
  return p;
}

inline InteractionEvent view(const std::string& learner, const std::string& res,
                             double minutes, int day) {
  InteractionEvent e;
  e.learner_id = learner;
  e.kind = EventKind::VideoView;
  e.resource_id = res;
  e.minutes = minutes;
  e.day = day;
  return e;
}

inline InteractionEvent answer(const std::string& learner, const std::string& res,
                               bool correct, int day, double minutes = 2.0) {
  InteractionEvent e;
  e.learner_id = learner;
  e.kind = EventKind::AnswerLog;
  e.resource_id = res;
  e.minutes = minutes;
  e.day = day;
  e.correct = correct;
  return e;
}

inline InteractionEvent forum(const std::string& learner, double minutes, int day) {
  InteractionEvent e;
  e.learner_id = learner;
  e.kind = EventKind::ForumComment;
  e.minutes = minutes;
  e.day = day;
  return e;
}

inline PathNode node(const std::string& resource_id, int position,
                     double minutes = 5.0, bool repeat = false) {
  PathNode n;
  n.resource_id = resource_id;
  n.position = position;
  n.estimated_minutes = minutes;
  n.repeat = repeat;
  return n;
}

inline LearningPath path(const std::string& learner,
                         const std::vector<std::string>& resource_ids) {
  LearningPath p;
  p.learner_id = learner;
  for (std::size_t i = 0; i < resource_ids.size(); ++i) {
    p.nodes.push_back(node(resource_ids[i], static_cast<int>(i) + 1));
  }
  return p;
}

// Tiny two-learner workspace used across the metric tests. Learner stu-a
// studied r1 and r2; stu-b studied r1 only; stu-c has no events.
inline Workspace small_workspace() {
  Workspace ws;
  ws.manifest.courses = {"course-1"};
  ws.graph.points = {kp("kp-a", 1.0), kp("kp-b", 2.0), kp("kp-c", 3.0)};
  ws.graph.prerequisites = {{"kp-a", "kp-b"}, {"kp-b", "kp-c"}};
  ws.resources = {resource("r1", {"kp-a"}, 4.0),
                  resource("r2", {"kp-b"}, 6.0, ResourceKind::Exercise),
                  resource("r3", {"kp-c"}, 5.0)};
  ws.profiles = {profile("stu-a"), profile("stu-b"), profile("stu-c")};
  ws.events = {
      view("stu-a", "r1", 3.0, 1),
      view("stu-a", "r2", 5.0, 2),
      forum("stu-a", 10.0, 2),
      view("stu-b", "r1", 5.0, 3),
      answer("stu-b", "r1", true, 4, 3.0),
  };
  ws.finalize();
  return ws;
}

// A scratch directory under the system temp root, unique per call.
inline std::filesystem::path temp_dir(const std::string& hint) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() /
             ("pathplan-" + hint + "-" + std::to_string(rng()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsupport
