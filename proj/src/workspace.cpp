#include "pathplan/workspace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace pathplan {

using json = nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

std::string loc(const std::string& file, int line) {
  return file + ":" + std::to_string(line);
}

json parse_line(const std::string& file, int line, const std::string& text) {
  json parsed = json::parse(text, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw Error(ErrorKind::Parse, loc(file, line) + ": malformed JSON record");
  }
  return parsed;
}

double require_number(const json& record, const char* field,
                      const std::string& where) {
  if (!record.contains(field) || !record.at(field).is_number()) {
    throw Error(ErrorKind::Parse,
                where + ": missing or non-numeric field '" + field + "'");
  }
  return record.at(field).get<double>();
}

std::string require_string(const json& record, const char* field,
                           const std::string& where) {
  if (!record.contains(field) || !record.at(field).is_string()) {
    throw Error(ErrorKind::Parse,
                where + ": missing or non-string field '" + field + "'");
  }
  return record.at(field).get<std::string>();
}

std::vector<std::string> string_list(const json& value) {
  std::vector<std::string> out;
  for (const auto& item : value) out.push_back(item.get<std::string>());
  return out;
}

// Deterministic uniform draws. std::uniform_*_distribution is
// implementation-defined, so the generator output is mapped by hand to keep
// synthetic workspaces byte-identical across toolchains.
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed + 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next() {
    // splitmix64
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t value = next();
    while (value >= limit) value = next();
    return value % n;
  }

  int range(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
};

double round1(double x) { return std::round(x * 10.0) / 10.0; }

std::string padded_id(const char* prefix, int index, int width) {
  std::ostringstream os;
  os << prefix << '-';
  std::string digits = std::to_string(index);
  for (int i = static_cast<int>(digits.size()); i < width; ++i) os << '0';
  os << digits;
  return os.str();
}

json demographics_to_json(const Demographics& d) {
  return json{{"age", d.age},
              {"gender", d.gender},
              {"grade", d.grade},
              {"major", d.major}};
}

json profile_to_json(const LearnerProfile& p) {
  json record{{"learner_id", p.learner_id},
              {"course_id", p.course_id},
              {"features", p.features}};
  if (p.demographics) record["demographics"] = demographics_to_json(*p.demographics);
  return record;
}

json resource_to_json(const Resource& r) {
  return json{{"id", r.id},
              {"title", r.title},
              {"description", r.description},
              {"kind", to_string(r.kind)},
              {"duration_estimate", r.duration_estimate},
              {"knowledge_ids", r.knowledge_ids}};
}

json event_to_json(const InteractionEvent& e) {
  json record{{"learner_id", e.learner_id},
              {"kind", to_string(e.kind)},
              {"minutes", e.minutes},
              {"day", e.day}};
  if (e.resource_id) record["resource_id"] = *e.resource_id;
  if (!e.knowledge_ids.empty()) record["knowledge_ids"] = e.knowledge_ids;
  if (e.correct) record["correct"] = *e.correct;
  return record;
}

void write_lines(const std::filesystem::path& file,
                 const std::vector<std::string>& lines) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + file.string());
  for (const auto& line : lines) out << line << '\n';
}

std::vector<std::string> read_lines(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + file.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::VideoView: return "video_view";
    case EventKind::AnswerLog: return "answer_log";
    case EventKind::ForumComment: return "forum_comment";
  }
  return "video_view";
}

EventKind event_kind_from_string(const std::string& text) {
  if (text == "video_view") return EventKind::VideoView;
  if (text == "answer_log") return EventKind::AnswerLog;
  if (text == "forum_comment") return EventKind::ForumComment;
  throw Error(ErrorKind::Parse, "unknown event kind '" + text + "'");
}

const LearnerProfile* Workspace::find_profile(const std::string& learner_id) const {
  auto it = profile_index_.find(learner_id);
  return it == profile_index_.end() ? nullptr : &profiles[it->second];
}

const Resource* Workspace::find_resource(const std::string& resource_id) const {
  auto it = resource_index_.find(resource_id);
  return it == resource_index_.end() ? nullptr : &resources[it->second];
}

const RiskSeries* Workspace::find_risk(const std::string& learner_id) const {
  auto it = risk_index_.find(learner_id);
  return it == risk_index_.end() ? nullptr : &risk[it->second];
}

void Workspace::finalize() {
  profile_index_.clear();
  resource_index_.clear();
  risk_index_.clear();
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    profile_index_[profiles[i].learner_id] = i;
  }
  for (std::size_t i = 0; i < resources.size(); ++i) {
    resource_index_[resources[i].id] = i;
    resources[i].time_records.clear();
  }
  for (std::size_t i = 0; i < risk.size(); ++i) {
    risk_index_[risk[i].learner_id] = i;
  }

  // Per-learner total minutes on each resource (the T_{i,j} samples).
  std::map<std::string, std::map<std::string, double>> totals;
  for (const auto& event : events) {
    if (event.kind == EventKind::ForumComment || !event.resource_id) continue;
    totals[*event.resource_id][event.learner_id] += event.minutes;
  }
  for (auto& [resource_id, per_learner] : totals) {
    auto it = resource_index_.find(resource_id);
    if (it == resource_index_.end()) continue;
    auto& records = resources[it->second].time_records;
    for (const auto& [learner_id, minutes] : per_learner) {
      records.push_back(TimeRecord{learner_id, minutes});
    }
  }
}

std::vector<std::string> validate_workspace(const Workspace& ws) {
  std::vector<std::string> problems;
  auto graph_check = validate_graph(ws.graph);
  for (const auto& violation : graph_check.violations) {
    problems.push_back("graph.json: " + violation);
  }
  std::set<std::string> learner_ids;
  for (const auto& profile : ws.profiles) {
    if (profile.learner_id.empty()) {
      problems.push_back("profiles.jsonl: empty learner_id");
    }
    if (!learner_ids.insert(profile.learner_id).second) {
      problems.push_back("profiles.jsonl: duplicate learner " + profile.learner_id);
    }
  }
  if (!ws.profiles.empty()) {
    std::size_t dims = ws.profiles.front().features.size();
    for (const auto& profile : ws.profiles) {
      if (profile.features.size() != dims) {
        problems.push_back("profiles.jsonl: feature dimension mismatch for " +
                           profile.learner_id);
        break;
      }
    }
  }
  for (std::size_t i = 0; i < ws.resources.size(); ++i) {
    const auto& resource = ws.resources[i];
    std::string where = "resources.jsonl:" + std::to_string(i + 1);
    if (resource.duration_estimate <= 0) {
      problems.push_back(where + ": nonpositive duration for " + resource.id);
    }
    if (resource.knowledge_ids.empty()) {
      problems.push_back(where + ": resource " + resource.id +
                         " covers no knowledge points");
    }
    for (const auto& kp : resource.knowledge_ids) {
      if (!ws.graph.contains(kp)) {
        problems.push_back(where + ": unknown knowledge point " + kp);
      }
    }
  }
  for (std::size_t i = 0; i < ws.events.size(); ++i) {
    const auto& event = ws.events[i];
    std::string where = "events.jsonl:" + std::to_string(i + 1);
    if (!ws.find_profile(event.learner_id)) {
      problems.push_back(where + ": unknown learner " + event.learner_id);
    }
    if (event.kind != EventKind::ForumComment) {
      if (!event.resource_id) {
        problems.push_back(where + ": missing resource_id");
      } else if (!ws.find_resource(*event.resource_id)) {
        problems.push_back(where + ": unknown resource " + *event.resource_id);
      }
    }
    if (event.kind == EventKind::AnswerLog && !event.correct) {
      problems.push_back(where + ": answer_log without correct flag");
    }
    if (event.minutes < 0) problems.push_back(where + ": negative minutes");
    if (event.day < 1) problems.push_back(where + ": day before 1");
    for (const auto& kp : event.knowledge_ids) {
      if (!ws.graph.contains(kp)) {
        problems.push_back(where + ": unknown knowledge point " + kp);
      }
    }
  }
  for (std::size_t i = 0; i < ws.risk.size(); ++i) {
    const auto& series = ws.risk[i];
    std::string where = "risk.jsonl:" + std::to_string(i + 1);
    if (!ws.find_profile(series.learner_id)) {
      problems.push_back(where + ": unknown learner " + series.learner_id);
    }
    if (series.weekly.empty()) problems.push_back(where + ": empty series");
    for (double p : series.weekly) {
      if (p < 0.0 || p > 1.0) {
        problems.push_back(where + ": probability outside [0,1]");
        break;
      }
    }
  }
  return problems;
}

Workspace load_workspace(const std::filesystem::path& dir) {
  Workspace ws;

  {
    auto file = dir / "manifest.json";
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::Io, "missing " + file.string());
    json manifest = json::parse(in, nullptr, false);
    if (manifest.is_discarded() || !manifest.is_object()) {
      throw Error(ErrorKind::Parse, "manifest.json:1: malformed JSON");
    }
    ws.manifest.schema_version =
        static_cast<int>(require_number(manifest, "schema_version", "manifest.json"));
    if (ws.manifest.schema_version != kSchemaVersion) {
      throw Error(ErrorKind::Parse,
                  "manifest.json: unsupported schema_version " +
                      std::to_string(ws.manifest.schema_version));
    }
    if (manifest.contains("courses")) {
      ws.manifest.courses = string_list(manifest.at("courses"));
    }
  }

  {
    int line = 0;
    for (const auto& text : read_lines(dir / "profiles.jsonl")) {
      ++line;
      if (text.empty()) continue;
      json record = parse_line("profiles.jsonl", line, text);
      std::string where = loc("profiles.jsonl", line);
      LearnerProfile profile;
      profile.learner_id = require_string(record, "learner_id", where);
      profile.course_id = require_string(record, "course_id", where);
      if (record.contains("demographics") && !record.at("demographics").is_null()) {
        const auto& demo = record.at("demographics");
        Demographics d;
        d.age = demo.value("age", 0);
        d.gender = demo.value("gender", "");
        d.grade = demo.value("grade", "");
        d.major = demo.value("major", "");
        profile.demographics = d;
      }
      if (record.contains("features")) {
        for (const auto& v : record.at("features")) {
          if (!v.is_number()) {
            throw Error(ErrorKind::Parse, where + ": non-numeric feature");
          }
          double value = v.get<double>();
          if (!std::isfinite(value)) {
            throw Error(ErrorKind::Parse, where + ": non-finite feature");
          }
          profile.features.push_back(value);
        }
      }
      ws.profiles.push_back(std::move(profile));
    }
  }

  {
    auto file = dir / "graph.json";
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::Io, "missing " + file.string());
    json graph = json::parse(in, nullptr, false);
    if (graph.is_discarded() || !graph.is_object()) {
      throw Error(ErrorKind::Parse, "graph.json:1: malformed JSON");
    }
    bool needs_difficulty = false;
    for (const auto& item : graph.value("points", json::array())) {
      KnowledgePoint point;
      point.id = require_string(item, "id", "graph.json");
      point.name = item.value("name", point.id);
      point.objective = item.value("objective", "");
      if (item.contains("difficulty")) {
        point.difficulty = item.at("difficulty").get<double>();
        if (!(point.difficulty > 0) || !std::isfinite(point.difficulty)) {
          throw Error(ErrorKind::Parse,
                      "graph.json: nonpositive difficulty for " + point.id);
        }
      } else {
        point.difficulty = 0;  // filled below
        needs_difficulty = true;
      }
      ws.graph.points.push_back(std::move(point));
    }
    for (const auto& item : graph.value("prerequisites", json::array())) {
      PrerequisiteEdge edge;
      edge.prerequisite_id = require_string(item, "prerequisite_id", "graph.json");
      edge.successor_id = require_string(item, "successor_id", "graph.json");
      ws.graph.prerequisites.push_back(std::move(edge));
    }
    if (needs_difficulty) {
      auto check = validate_graph(ws.graph);
      if (!check.ok) {
        throw Error(ErrorKind::Integrity, "graph.json: " + check.violations.front());
      }
      auto depths = chain_depth_difficulties(ws.graph);
      for (auto& point : ws.graph.points) {
        if (point.difficulty <= 0) point.difficulty = depths[point.id];
      }
    }
  }

  {
    int line = 0;
    for (const auto& text : read_lines(dir / "resources.jsonl")) {
      ++line;
      if (text.empty()) continue;
      json record = parse_line("resources.jsonl", line, text);
      std::string where = loc("resources.jsonl", line);
      Resource resource;
      resource.id = require_string(record, "id", where);
      resource.title = record.value("title", "");
      resource.description = record.value("description", "");
      resource.kind = resource_kind_from_string(require_string(record, "kind", where));
      resource.duration_estimate = require_number(record, "duration_estimate", where);
      if (record.contains("knowledge_ids")) {
        resource.knowledge_ids = string_list(record.at("knowledge_ids"));
      }
      ws.resources.push_back(std::move(resource));
    }
  }

  {
    int line = 0;
    for (const auto& text : read_lines(dir / "events.jsonl")) {
      ++line;
      if (text.empty()) continue;
      json record = parse_line("events.jsonl", line, text);
      std::string where = loc("events.jsonl", line);
      InteractionEvent event;
      event.learner_id = require_string(record, "learner_id", where);
      event.kind = event_kind_from_string(require_string(record, "kind", where));
      if (record.contains("resource_id")) {
        event.resource_id = record.at("resource_id").get<std::string>();
      }
      if (record.contains("knowledge_ids")) {
        event.knowledge_ids = string_list(record.at("knowledge_ids"));
      }
      event.minutes = require_number(record, "minutes", where);
      event.day = static_cast<int>(require_number(record, "day", where));
      if (record.contains("correct")) {
        event.correct = record.at("correct").get<bool>();
      }
      ws.events.push_back(std::move(event));
    }
  }

  if (std::filesystem::exists(dir / "risk.jsonl")) {
    int line = 0;
    for (const auto& text : read_lines(dir / "risk.jsonl")) {
      ++line;
      if (text.empty()) continue;
      json record = parse_line("risk.jsonl", line, text);
      std::string where = loc("risk.jsonl", line);
      RiskSeries series;
      series.learner_id = require_string(record, "learner_id", where);
      for (const auto& v : record.value("weekly", json::array())) {
        series.weekly.push_back(v.get<double>());
      }
      ws.risk.push_back(std::move(series));
    }
  }

  ws.finalize();
  auto problems = validate_workspace(ws);
  if (!problems.empty()) {
    std::string message = "workspace integrity violations:";
    std::size_t shown = std::min<std::size_t>(problems.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) message += "\n  " + problems[i];
    if (problems.size() > shown) {
      message += "\n  ... and " + std::to_string(problems.size() - shown) + " more";
    }
    throw Error(ErrorKind::Integrity, message);
  }
  return ws;
}

void save_workspace(const Workspace& ws, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  {
    json manifest{{"schema_version", ws.manifest.schema_version},
                  {"courses", ws.manifest.courses}};
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
  }
  {
    std::vector<std::string> lines;
    for (const auto& profile : ws.profiles) {
      lines.push_back(profile_to_json(profile).dump());
    }
    write_lines(dir / "profiles.jsonl", lines);
  }
  {
    json points = json::array();
    for (const auto& point : ws.graph.points) {
      points.push_back(json{{"id", point.id},
                            {"name", point.name},
                            {"difficulty", point.difficulty},
                            {"objective", point.objective}});
    }
    json edges = json::array();
    for (const auto& edge : ws.graph.prerequisites) {
      edges.push_back(json{{"prerequisite_id", edge.prerequisite_id},
                           {"successor_id", edge.successor_id}});
    }
    json graph{{"points", points}, {"prerequisites", edges}};
    std::ofstream out(dir / "graph.json", std::ios::binary);
    out << graph.dump(2) << '\n';
  }
  {
    std::vector<std::string> lines;
    for (const auto& resource : ws.resources) {
      lines.push_back(resource_to_json(resource).dump());
    }
    write_lines(dir / "resources.jsonl", lines);
  }
  {
    std::vector<std::string> lines;
    for (const auto& event : ws.events) {
      lines.push_back(event_to_json(event).dump());
    }
    write_lines(dir / "events.jsonl", lines);
  }
  if (!ws.risk.empty()) {
    std::vector<std::string> lines;
    for (const auto& series : ws.risk) {
      lines.push_back(json{{"learner_id", series.learner_id},
                           {"weekly", series.weekly}}
                          .dump());
    }
    write_lines(dir / "risk.jsonl", lines);
  }
}

std::map<std::string, ResourceTimeStat> resource_time_stats(const Workspace& ws) {
  std::map<std::string, ResourceTimeStat> stats;
  for (const auto& resource : ws.resources) {
    if (resource.time_records.empty()) continue;
    double total = 0;
    for (const auto& record : resource.time_records) total += record.minutes;
    stats[resource.id] = ResourceTimeStat{
        total / static_cast<double>(resource.time_records.size()),
        static_cast<int>(resource.time_records.size())};
  }
  return stats;
}

LearnerTimeStats learner_time_stats(const Workspace& ws,
                                    const std::string& learner_id) {
  if (!ws.find_profile(learner_id)) {
    throw Error(ErrorKind::UnknownLearner, "unknown learner " + learner_id);
  }
  LearnerTimeStats stats;
  int first = 0, last = 0;
  std::map<int, double> forum;
  for (const auto& event : ws.events) {
    if (event.learner_id != learner_id) continue;
    if (first == 0 || event.day < first) first = event.day;
    if (event.day > last) last = event.day;
    if (event.kind == EventKind::ForumComment) {
      forum[event.day] += event.minutes;
    } else if (event.resource_id) {
      stats.per_resource_minutes[*event.resource_id] += event.minutes;
    }
  }
  if (first == 0) return stats;  // no events: d = 0
  stats.first_day = first;
  stats.active_days = last - first + 1;
  stats.forum_minutes_by_day.assign(stats.active_days, 0.0);
  for (const auto& [day, minutes] : forum) {
    stats.forum_minutes_by_day[day - first] = minutes;
  }
  return stats;
}

Workspace synth_cohort(const SynthSpec& spec) {
  if (spec.learners < 1 || spec.resources < 1 || spec.knowledge_points < 1) {
    throw Error(ErrorKind::Usage, "synth counts must all be >= 1");
  }
  Rng rng(spec.seed);
  Workspace ws;
  ws.manifest.schema_version = kSchemaVersion;
  ws.manifest.courses = {"course-1"};

  static const char* kGenders[] = {"female", "male", "nonbinary"};
  static const char* kGrades[] = {"freshman", "sophomore", "junior", "senior"};
  static const char* kMajors[] = {"mechanical engineering", "logistics",
                                  "electronics", "academic english"};

  for (int i = 1; i <= spec.knowledge_points; ++i) {
    KnowledgePoint point;
    point.id = padded_id("kp", i, 3);
    point.name = "Topic " + std::to_string(i);
    point.objective = "Understand topic " + std::to_string(i);
    point.difficulty = 0;  // from chain depth below
    ws.graph.points.push_back(std::move(point));
  }
  // Edges always run from a lower index to a higher one, so the graph is
  // acyclic by construction. A chain backbone keeps the hierarchy deep, the
  // way chapter sequences are.
  for (int j = 2; j <= spec.knowledge_points; ++j) {
    std::set<int> picked;
    if (rng.unit() < 0.75) picked.insert(j - 1);
    if (rng.unit() < 0.3) picked.insert(rng.range(1, j - 1));
    for (int i : picked) {
      ws.graph.prerequisites.push_back(
          PrerequisiteEdge{padded_id("kp", i, 3), padded_id("kp", j, 3)});
    }
  }
  auto depths = chain_depth_difficulties(ws.graph);
  for (auto& point : ws.graph.points) point.difficulty = depths[point.id];

  static const ResourceKind kKinds[] = {ResourceKind::Video,
                                        ResourceKind::Exercise,
                                        ResourceKind::Document};
  for (int i = 1; i <= spec.resources; ++i) {
    Resource resource;
    resource.id = padded_id("res", i, 3);
    resource.title = "Lesson " + std::to_string(i);
    resource.kind = kKinds[rng.below(3)];
    resource.description = std::string("A ") + to_string(resource.kind) +
                           " unit for lesson " + std::to_string(i);
    resource.duration_estimate = round1(rng.uniform(3.0, 15.0));
    int coverage = 1 + rng.range(0, std::min(2, spec.knowledge_points - 1));
    std::set<int> kps;
    while (static_cast<int>(kps.size()) < coverage) {
      kps.insert(rng.range(1, spec.knowledge_points));
    }
    for (int kp : kps) resource.knowledge_ids.push_back(padded_id("kp", kp, 3));
    ws.resources.push_back(std::move(resource));
  }

  int weeks = 6 + rng.range(0, 4);
  for (int i = 1; i <= spec.learners; ++i) {
    LearnerProfile profile;
    profile.learner_id = padded_id("stu", i, 3);
    profile.course_id = "course-1";
    Demographics demo;
    demo.age = 18 + rng.range(0, 11);
    demo.gender = kGenders[rng.below(3)];
    demo.grade = kGrades[rng.below(4)];
    demo.major = kMajors[rng.below(4)];
    profile.demographics = demo;
    for (int f = 0; f < 8; ++f) profile.features.push_back(round1(rng.unit() * 10.0) / 10.0);
    const std::string learner_id = profile.learner_id;
    ws.profiles.push_back(std::move(profile));

    double skill = rng.uniform(0.25, 0.95);
    int last_day = weeks * 7;
    for (const auto& resource : ws.resources) {
      if (rng.unit() > 0.55) continue;  // not every learner touches everything
      int views = 1 + static_cast<int>(rng.below(2));
      for (int v = 0; v < views; ++v) {
        InteractionEvent event;
        event.learner_id = learner_id;
        event.kind = EventKind::VideoView;
        event.resource_id = resource.id;
        event.minutes = round1(rng.uniform(2.0, std::max(2.5, resource.duration_estimate)));
        event.day = rng.range(1, last_day);
        ws.events.push_back(std::move(event));
      }
      int answers = static_cast<int>(rng.below(3));
      if (resource.kind == ResourceKind::Exercise) answers += 1;
      for (int a = 0; a < answers; ++a) {
        InteractionEvent event;
        event.learner_id = learner_id;
        event.kind = EventKind::AnswerLog;
        event.resource_id = resource.id;
        event.minutes = round1(rng.uniform(1.0, 5.0));
        event.day = rng.range(1, last_day);
        event.correct = rng.unit() < skill;
        ws.events.push_back(std::move(event));
      }
    }
    for (int w = 1; w <= weeks; ++w) {
      if (rng.unit() < 0.5) {
        InteractionEvent event;
        event.learner_id = learner_id;
        event.kind = EventKind::ForumComment;
        event.minutes = round1(rng.uniform(1.0, 10.0));
        event.day = 7 * (w - 1) + rng.range(1, 7);
        ws.events.push_back(std::move(event));
      }
    }

    RiskSeries series;
    series.learner_id = learner_id;
    double base = rng.uniform(0.15, 0.5);
    double slope = rng.uniform(-0.01, 0.07);
    for (int w = 1; w <= weeks; ++w) {
      double wiggle = rng.uniform(-0.05, 0.05);
      double p = base + slope * (w - 1) + wiggle;
      series.weekly.push_back(std::clamp(std::round(p * 1000.0) / 1000.0, 0.02, 0.98));
    }
    ws.risk.push_back(std::move(series));
  }

  ws.finalize();
  return ws;
}

}  // namespace pathplan
