#include "pathplan/agents.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace pathplan {

using json = nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + file.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json read_json_file(const std::filesystem::path& file) {
  json parsed = json::parse(read_file(file), nullptr, false);
  if (parsed.is_discarded()) {
    throw Error(ErrorKind::Parse, "malformed JSON in " + file.string());
  }
  return parsed;
}

void replace_all(std::string& text, const std::string& placeholder,
                 const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(placeholder, pos)) != std::string::npos) {
    text.replace(pos, placeholder.size(), value);
    pos += value.size();
  }
}

// Templates keep the role sentence above a `---` line and the user body below.
std::pair<std::string, std::string> split_template(const std::string& text,
                                                   const std::string& name) {
  auto marker = text.find("\n---\n");
  if (marker == std::string::npos) {
    throw Error(ErrorKind::Parse,
                "template " + name + " lacks the `---` system/user separator");
  }
  return {text.substr(0, marker), text.substr(marker + 5)};
}

json graph_to_json(const KnowledgeGraph& graph) {
  json points = json::array();
  for (const auto& point : graph.points) {
    points.push_back(json{{"id", point.id},
                          {"name", point.name},
                          {"difficulty", point.difficulty},
                          {"objective", point.objective}});
  }
  json edges = json::array();
  for (const auto& edge : graph.prerequisites) {
    edges.push_back(json{{"prerequisite_id", edge.prerequisite_id},
                         {"successor_id", edge.successor_id}});
  }
  return json{{"points", points}, {"prerequisites", edges}};
}

json state_to_json(const KnowledgeState& state) {
  json status = json::object();
  for (const auto& [kp, s] : state.status) status[kp] = to_string(s);
  return json{{"mastery", state.mastery}, {"status", status}};
}

// Recommended resources with the metadata the planner and reflector need:
// difficulty and the expected per-session load (empirical mean when sampled,
// authored estimate otherwise).
json resources_to_json(const LearnerContext& ctx, const Workspace& ws) {
  auto stats = resource_time_stats(ws);
  json out = json::array();
  for (const auto& resource_id : ctx.recommendations.resource_ids) {
    const auto* resource = ws.find_resource(resource_id);
    if (!resource) {
      throw Error(ErrorKind::Integrity,
                  "recommendation references unknown resource " + resource_id);
    }
    auto stat = stats.find(resource_id);
    double load = stat == stats.end() ? resource->duration_estimate
                                      : stat->second.mean_minutes;
    out.push_back(json{{"id", resource->id},
                       {"title", resource->title},
                       {"description", resource->description},
                       {"kind", to_string(resource->kind)},
                       {"duration_estimate", resource->duration_estimate},
                       {"load_minutes", load},
                       {"difficulty", resource_difficulty(*resource, ws.graph)},
                       {"knowledge_ids", resource->knowledge_ids}});
  }
  return out;
}

json base_context_json(const LearnerContext& ctx, const Workspace& ws) {
  json data{{"learner_id", ctx.profile.learner_id},
            {"course_id", ctx.profile.course_id},
            {"alert_week", ctx.alert.week},
            {"alert_probability", ctx.alert.probability},
            {"features", ctx.profile.features},
            {"knowledge_state", state_to_json(ctx.state)},
            {"graph", graph_to_json(ws.graph)}};
  if (ctx.profile.demographics) {
    const auto& d = *ctx.profile.demographics;
    data["demographics"] = json{{"age", d.age},
                                {"gender", d.gender},
                                {"grade", d.grade},
                                {"major", d.major}};
  } else {
    data["demographics"] = nullptr;
  }
  return data;
}

std::vector<std::string> missing_context_fields(const LearnerContext& ctx,
                                                bool need_recommendations) {
  std::vector<std::string> missing;
  if (ctx.profile.learner_id.empty()) missing.push_back("profile");
  if (ctx.alert.week < 1) missing.push_back("alert_week");
  if (ctx.state.status.empty()) missing.push_back("knowledge_state");
  if (need_recommendations && ctx.recommendations.resource_ids.empty()) {
    missing.push_back("recommendations");
  }
  return missing;
}

void require_context(const LearnerContext& ctx, bool need_recommendations) {
  auto missing = missing_context_fields(ctx, need_recommendations);
  if (missing.empty()) return;
  std::string message = "incomplete learner context, missing:";
  for (const auto& field : missing) message += " " + field;
  throw Error(ErrorKind::IncompleteContext, message);
}

std::string category_name(Suggestion::Category category) {
  switch (category) {
    case Suggestion::Category::Clt: return "clt";
    case Suggestion::Category::Zpd: return "zpd";
    case Suggestion::Category::Other: return "other";
  }
  return "other";
}

Suggestion::Category category_from_string(const std::string& text) {
  if (text == "clt") return Suggestion::Category::Clt;
  if (text == "zpd") return Suggestion::Category::Zpd;
  return Suggestion::Category::Other;
}

json suggestions_to_json(const std::vector<Suggestion>& suggestions) {
  json out = json::array();
  for (const auto& suggestion : suggestions) {
    out.push_back(json{{"category", category_name(suggestion.category)},
                       {"description", suggestion.description},
                       {"positions", suggestion.positions}});
  }
  return out;
}

}  // namespace

const char* to_string(CltVerdict verdict) {
  switch (verdict) {
    case CltVerdict::Pass: return "pass";
    case CltVerdict::Overload: return "overload";
    case CltVerdict::Underload: return "underload";
  }
  return "pass";
}

const char* to_string(ZpdVerdict verdict) {
  return verdict == ZpdVerdict::Pass ? "pass" : "non_progressive";
}

json report_to_json(const DiagnosticReport& report) {
  return json{{"mastered", report.mastered},
              {"weak", report.weak},
              {"unlearned", report.unlearned},
              {"preferences", report.preferences},
              {"risk_summary", report.risk_summary}};
}

DiagnosticReport report_from_json(const json& payload) {
  DiagnosticReport report;
  for (const auto& id : payload.at("mastered")) report.mastered.push_back(id);
  for (const auto& id : payload.at("weak")) report.weak.push_back(id);
  for (const auto& id : payload.at("unlearned")) report.unlearned.push_back(id);
  report.preferences = payload.at("preferences").get<std::string>();
  report.risk_summary = payload.at("risk_summary").get<std::string>();
  return report;
}

json reflection_to_json(const ReflectionResult& result) {
  return json{{"accepted", result.accepted},
              {"clt_verdict", to_string(result.clt_verdict)},
              {"zpd_verdict", to_string(result.zpd_verdict)},
              {"suggestions", suggestions_to_json(result.suggestions)}};
}

ReflectionResult reflection_from_json(const json& payload) {
  ReflectionResult result;
  result.accepted = payload.at("accepted").get<bool>();
  std::string clt = payload.at("clt_verdict").get<std::string>();
  result.clt_verdict = clt == "overload"    ? CltVerdict::Overload
                       : clt == "underload" ? CltVerdict::Underload
                                            : CltVerdict::Pass;
  result.zpd_verdict = payload.at("zpd_verdict").get<std::string>() == "pass"
                           ? ZpdVerdict::Pass
                           : ZpdVerdict::NonProgressive;
  for (const auto& item : payload.at("suggestions")) {
    Suggestion suggestion;
    suggestion.category = category_from_string(item.at("category").get<std::string>());
    suggestion.description = item.at("description").get<std::string>();
    for (const auto& position : item.at("positions")) {
      suggestion.positions.push_back(position.get<int>());
    }
    result.suggestions.push_back(std::move(suggestion));
  }
  return result;
}

json plan_to_json(const LearningPath& path) {
  json nodes = json::array();
  for (const auto& node : path.nodes) {
    nodes.push_back(json{{"resource_id", node.resource_id},
                         {"position", node.position},
                         {"local_rationale", node.local_rationale},
                         {"estimated_minutes", node.estimated_minutes},
                         {"repeat", node.repeat}});
  }
  return json{{"path", nodes}, {"global_rationale", path.global_rationale}};
}

LearningPath plan_from_json(const json& payload, const std::string& learner_id) {
  LearningPath path;
  path.learner_id = learner_id;
  for (const auto& item : payload.at("path")) {
    PathNode node;
    node.resource_id = item.at("resource_id").get<std::string>();
    node.position = item.at("position").get<int>();
    node.local_rationale = item.at("local_rationale").get<std::string>();
    node.estimated_minutes = item.at("estimated_minutes").get<double>();
    node.repeat = item.value("repeat", false);
    path.nodes.push_back(std::move(node));
  }
  path.global_rationale = payload.at("global_rationale").get<std::string>();
  return path;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& asset_dir) {
  PromptLibrary lib;
  auto templates = asset_dir / "templates";
  lib.analytics_ = read_file(templates / "analytics.txt");
  lib.planner_ = read_file(templates / "planner.txt");
  lib.reflector_ = read_file(templates / "reflector.txt");
  auto blocks = templates / "blocks";
  lib.clt_planner_ = read_file(blocks / "clt_planner.txt");
  lib.zpd_planner_ = read_file(blocks / "zpd_planner.txt");
  lib.clt_reflector_ = read_file(blocks / "clt_reflector.txt");
  lib.zpd_reflector_ = read_file(blocks / "zpd_reflector.txt");
  lib.report_block_ = read_file(blocks / "report_planner.txt");
  lib.revision_block_ = read_file(blocks / "revision_planner.txt");
  auto schemas = asset_dir / "schemas";
  lib.report_schema_ = read_json_file(schemas / "report.json");
  lib.plan_schema_ = read_json_file(schemas / "plan.json");
  lib.reflection_schema_ = read_json_file(schemas / "reflection.json");
  return lib;
}

const json& PromptLibrary::schema(SchemaId id) const {
  switch (id) {
    case SchemaId::Report: return report_schema_;
    case SchemaId::Plan: return plan_schema_;
    case SchemaId::Reflection: return reflection_schema_;
  }
  return report_schema_;
}

ChatRequest PromptLibrary::build_analytics_prompt(const LearnerContext& ctx,
                                                  const Workspace& ws,
                                                  const std::string& tag) const {
  require_context(ctx, /*need_recommendations=*/false);
  auto [system_text, user_text] = split_template(analytics_, "analytics");
  replace_all(user_text, "{{data}}", base_context_json(ctx, ws).dump(2));
  replace_all(user_text, "{{schema}}", report_schema_.dump(2));
  ChatRequest request;
  request.system_text = system_text;
  request.user_text = user_text;
  request.tag = tag;
  return request;
}

ChatRequest PromptLibrary::build_planning_prompt(
    const LearnerContext& ctx, const Workspace& ws,
    const std::optional<DiagnosticReport>& report,
    const ConstraintConfig& constraints,
    const std::optional<RevisionInput>& revision, const std::string& tag) const {
  require_context(ctx, /*need_recommendations=*/true);
  if (revision && revision->suggestions.empty()) {
    throw Error(ErrorKind::Usage, "revision input without suggestions");
  }
  if (constraints.max_path_length < 1 || !(constraints.band_low > 0) ||
      constraints.band_low > constraints.band_high) {
    throw Error(ErrorKind::Usage, "invalid constraint configuration");
  }

  json data = base_context_json(ctx, ws);
  data["resources"] = resources_to_json(ctx, ws);
  data["capacity_minutes"] =
      ctx.capacity_minutes ? json(*ctx.capacity_minutes) : json(nullptr);
  data["load_band"] = json{{"low", constraints.band_low},
                           {"high", constraints.band_high}};
  data["max_path_length"] = constraints.max_path_length;

  auto [system_text, user_text] = split_template(planner_, "planner");
  std::string report_block;
  if (report) {
    report_block = report_block_;
    replace_all(report_block, "{{report}}", report_to_json(*report).dump(2));
  }
  std::string revision_block;
  if (revision) {
    revision_block = revision_block_;
    replace_all(revision_block, "{{previous_path}}",
                plan_to_json(revision->previous).dump(2));
    replace_all(revision_block, "{{suggestions}}",
                suggestions_to_json(revision->suggestions).dump(2));
  }
  replace_all(user_text, "{{data}}", data.dump(2));
  replace_all(user_text, "{{report_block}}", report_block);
  replace_all(user_text, "{{clt_block}}",
              constraints.include_clt ? clt_planner_ : "");
  replace_all(user_text, "{{zpd_block}}",
              constraints.include_zpd ? zpd_planner_ : "");
  replace_all(user_text, "{{revision_block}}", revision_block);
  replace_all(user_text, "{{schema}}", plan_schema_.dump(2));

  ChatRequest request;
  request.system_text = system_text;
  request.user_text = user_text;
  request.tag = tag;
  return request;
}

ChatRequest PromptLibrary::build_reflection_prompt(
    const LearnerContext& ctx, const Workspace& ws, const LearningPath& path,
    const ConstraintConfig& constraints, const std::string& tag) const {
  require_context(ctx, /*need_recommendations=*/true);

  json data = base_context_json(ctx, ws);
  data["resources"] = resources_to_json(ctx, ws);
  json plan = plan_to_json(path);
  data["path"] = json{{"nodes", plan.at("path")},
                      {"global_rationale", plan.at("global_rationale")}};
  data["capacity_minutes"] =
      ctx.capacity_minutes ? json(*ctx.capacity_minutes) : json(nullptr);
  data["load_band"] = json{{"low", constraints.band_low},
                           {"high", constraints.band_high}};

  auto [system_text, user_text] = split_template(reflector_, "reflector");
  replace_all(user_text, "{{data}}", data.dump(2));
  replace_all(user_text, "{{clt_block}}",
              constraints.include_clt ? clt_reflector_ : "");
  replace_all(user_text, "{{zpd_block}}",
              constraints.include_zpd ? zpd_reflector_ : "");
  replace_all(user_text, "{{schema}}", reflection_schema_.dump(2));

  ChatRequest request;
  request.system_text = system_text;
  request.user_text = user_text;
  request.tag = tag;
  return request;
}

DiagnosticReport run_analytics(Backend& backend, const PromptLibrary& prompts,
                               const LearnerContext& ctx, const Workspace& ws,
                               const std::string& tag,
                               std::vector<AttemptRecord>& attempts,
                               int max_repairs) {
  ChatRequest request = prompts.build_analytics_prompt(ctx, ws, tag);

  // The three lists must partition the course's knowledge points.
  std::set<std::string> course_kps;
  for (const auto& point : ws.graph.points) course_kps.insert(point.id);
  auto semantic = [&course_kps](const json& payload) {
    std::vector<std::string> problems;
    std::set<std::string> seen;
    for (const char* field : {"mastered", "weak", "unlearned"}) {
      for (const auto& id : payload.at(field)) {
        std::string kp = id.get<std::string>();
        if (!seen.insert(kp).second) {
          problems.push_back("knowledge point " + kp +
                             " appears in more than one list");
        }
        if (!course_kps.count(kp)) {
          problems.push_back("unknown knowledge point " + kp);
        }
      }
    }
    for (const auto& kp : course_kps) {
      if (!seen.count(kp)) {
        problems.push_back("knowledge point " + kp + " missing from all lists");
      }
    }
    return problems;
  };

  json payload = complete_validated(backend, request,
                                    prompts.schema(SchemaId::Report), attempts,
                                    max_repairs, semantic);
  return report_from_json(payload);
}

LearningPath run_planner(Backend& backend, const PromptLibrary& prompts,
                         const LearnerContext& ctx, const Workspace& ws,
                         const std::optional<DiagnosticReport>& report,
                         const ConstraintConfig& constraints,
                         const std::optional<RevisionInput>& revision,
                         const std::string& tag,
                         std::vector<AttemptRecord>& attempts, int max_repairs) {
  ChatRequest request =
      prompts.build_planning_prompt(ctx, ws, report, constraints, revision, tag);

  std::set<std::string> allowed(ctx.recommendations.resource_ids.begin(),
                                ctx.recommendations.resource_ids.end());
  bool saw_unknown_id = false;
  auto semantic = [&](const json& payload) {
    std::vector<std::string> problems;
    LearningPath candidate = plan_from_json(payload, ctx.profile.learner_id);
    for (const auto& node : candidate.nodes) {
      if (!allowed.count(node.resource_id)) {
        saw_unknown_id = true;
        problems.push_back("resource " + node.resource_id +
                           " is not in the recommended list");
      }
    }
    auto structural =
        path_structure_violations(candidate, constraints.max_path_length);
    problems.insert(problems.end(), structural.begin(), structural.end());
    return problems;
  };

  try {
    json payload = complete_validated(backend, request,
                                      prompts.schema(SchemaId::Plan), attempts,
                                      max_repairs, semantic);
    return plan_from_json(payload, ctx.profile.learner_id);
  } catch (const Error& error) {
    if (error.kind() == ErrorKind::ValidationFailedAfterRepairs && saw_unknown_id) {
      throw Error(ErrorKind::HallucinatedResource, error.what());
    }
    throw;
  }
}

ReflectionResult run_reflector(Backend& backend, const PromptLibrary& prompts,
                               const LearnerContext& ctx, const Workspace& ws,
                               const LearningPath& path,
                               const ConstraintConfig& constraints,
                               const std::string& tag,
                               std::vector<AttemptRecord>& attempts,
                               int max_repairs) {
  ChatRequest request =
      prompts.build_reflection_prompt(ctx, ws, path, constraints, tag);

  auto semantic = [](const json& payload) {
    std::vector<std::string> problems;
    bool accepted = payload.at("accepted").get<bool>();
    bool has_suggestions = !payload.at("suggestions").empty();
    if (accepted && has_suggestions) {
      problems.push_back("accepted paths must carry no suggestions");
    }
    if (!accepted && !has_suggestions) {
      problems.push_back("rejected paths must carry at least one suggestion");
    }
    return problems;
  };

  json payload = complete_validated(backend, request,
                                    prompts.schema(SchemaId::Reflection),
                                    attempts, max_repairs, semantic);
  return reflection_from_json(payload);
}

}  // namespace pathplan
