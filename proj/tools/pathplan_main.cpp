// Command-line front end for the learning path planning engine:
// synth | ingest | pipeline | plan | evaluate | report.

#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "pathplan/assets.hpp"
#include "pathplan/metrics.hpp"
#include "pathplan/orchestrator.hpp"
#include "pathplan/records.hpp"
#include "pathplan/signals.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace pathplan;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitBackend = 3;

int exit_code_for(const Error& error) {
  switch (error.kind()) {
    case ErrorKind::Usage:
      return kExitUsage;
    case ErrorKind::Backend:
    case ErrorKind::RetriesExhausted:
    case ErrorKind::MissingApiKey:
    case ErrorKind::ScriptExhausted:
    case ErrorKind::NoJsonFound:
    case ErrorKind::SchemaViolation:
    case ErrorKind::ValidationFailedAfterRepairs:
    case ErrorKind::HallucinatedResource:
      return kExitBackend;
    default:
      return kExitData;
  }
}

void write_text(const fs::path& file, const std::string& text) {
  fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + file.string());
  out << text;
}

json read_json_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + file.string());
  json parsed = json::parse(in, nullptr, false);
  if (parsed.is_discarded()) {
    throw Error(ErrorKind::Parse, "malformed JSON in " + file.string());
  }
  return parsed;
}

struct PipelineOptions {
  double risk_threshold = kDefaultRiskThreshold;
  double weak_threshold = kDefaultWeakThreshold;
  int list_length = kDefaultListLength;
};

struct PlanOptions {
  std::string method = "malpp";
  std::string backend = "mock-rule";
  std::vector<std::string> ablations;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int max_versions = kDefaultMaxPlanVersions;
  int max_repairs = kDefaultMaxRepairs;
  int max_path_length = kDefaultMaxPathLength;
  std::string load_band = "0.8:1.2";
  double cl_ext = 0.0;
  int parallel = 1;
  int oracle_max_len = 5;
  std::string script_file;
  std::string base_url;
  std::string model_name;
  std::string api_key_env = "PATHPLAN_API_KEY";
  int timeout_ms = 30000;
  int max_retries = 3;
  int max_concurrency = 0;
  int min_interval_ms = 0;
};

std::pair<double, double> parse_band(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorKind::Usage, "--load-band expects LOW:HIGH");
  }
  double low = std::stod(text.substr(0, colon));
  double high = std::stod(text.substr(colon + 1));
  if (!(low > 0) || low > high) {
    throw Error(ErrorKind::Usage, "--load-band needs 0 < LOW <= HIGH");
  }
  return {low, high};
}

int cmd_synth(const SynthSpec& spec, const fs::path& out_dir) {
  Workspace ws = synth_cohort(spec);
  save_workspace(ws, out_dir);
  auto problems = validate_workspace(ws);
  if (!problems.empty()) {
    for (const auto& p : problems) std::cerr << p << "\n";
    return kExitData;
  }
  std::cout << "workspace: " << out_dir.string() << "\n"
            << "learners: " << ws.profiles.size()
            << "  resources: " << ws.resources.size()
            << "  knowledge points: " << ws.graph.points.size()
            << "  events: " << ws.events.size() << "\n";
  return kExitOk;
}

int cmd_ingest(const fs::path& dir) {
  Workspace ws = load_workspace(dir);
  std::cout << "workspace ok: " << ws.profiles.size() << " learners, "
            << ws.resources.size() << " resources, " << ws.graph.points.size()
            << " knowledge points, " << ws.events.size() << " events, "
            << ws.risk.size() << " risk series\n";
  return kExitOk;
}

int cmd_pipeline(const fs::path& ws_dir, const fs::path& out_dir,
                 const PipelineOptions& options) {
  Workspace ws = load_workspace(ws_dir);
  fs::create_directories(out_dir / "states");
  fs::create_directories(out_dir / "recs");

  std::vector<std::string> alert_lines;
  int flagged = 0;
  for (const auto& profile : ws.profiles) {
    RiskSeries series;
    if (const auto* stored = ws.find_risk(profile.learner_id)) {
      series = *stored;
    } else {
      series = reference_risk_series(ws, profile.learner_id);
    }
    if (series.weekly.empty()) continue;
    auto alert = detect_risk(series, options.risk_threshold);
    if (!alert) continue;
    ++flagged;
    alert_lines.push_back(alert_to_json(*alert).dump());

    KnowledgeState state = trace_knowledge(ws, profile.learner_id, alert->week,
                                           options.weak_threshold);
    write_text(out_dir / "states" / (profile.learner_id + ".json"),
               state_record_to_json(state).dump(2) + "\n");

    RecommendationList recs =
        recommend(ws, profile.learner_id, state, options.list_length);
    write_text(out_dir / "recs" / (profile.learner_id + ".json"),
               recommendation_to_json(recs).dump(2) + "\n");
  }
  std::string alerts_text;
  for (const auto& line : alert_lines) alerts_text += line + "\n";
  write_text(out_dir / "alerts.jsonl", alerts_text);
  std::cout << "flagged learners: " << flagged << " of " << ws.profiles.size()
            << "\n";
  return kExitOk;
}

std::vector<LearnerContext> load_contexts(const Workspace& ws,
                                          const fs::path& out_dir,
                                          double cl_ext) {
  auto alerts_file = out_dir / "alerts.jsonl";
  std::ifstream in(alerts_file);
  if (!in) {
    throw Error(ErrorKind::Io,
                "missing " + alerts_file.string() + " (run `pipeline` first)");
  }
  std::vector<LearnerContext> contexts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    RiskAlert alert = alert_from_json(json::parse(line));
    const auto* profile = ws.find_profile(alert.learner_id);
    if (!profile) {
      throw Error(ErrorKind::Integrity,
                  "alerts.jsonl names unknown learner " + alert.learner_id);
    }
    LearnerContext ctx;
    ctx.profile = *profile;
    ctx.alert = alert;
    ctx.state = state_record_from_json(
        read_json_file(out_dir / "states" / (alert.learner_id + ".json")));
    ctx.recommendations = recommendation_from_json(
        read_json_file(out_dir / "recs" / (alert.learner_id + ".json")));
    try {
      ctx.capacity_minutes = student_load(ws, alert.learner_id, cl_ext).cl_student;
    } catch (const Error& error) {
      if (error.kind() != ErrorKind::UndefinedLoad) throw;
    }
    contexts.push_back(std::move(ctx));
  }
  return contexts;
}

std::unique_ptr<Backend> build_backend(const PlanOptions& options) {
  if (options.backend == "mock-rule") return make_rule_based_backend();
  if (options.backend == "mock-script") {
    if (options.script_file.empty()) {
      throw Error(ErrorKind::Usage, "--script FILE is required for mock-script");
    }
    auto scripted = std::make_unique<ScriptedBackend>();
    json script = read_json_file(options.script_file);
    for (const auto& entry : script.at("scripts")) {
      std::string tag = entry.at("tag").get<std::string>();
      for (const auto& response : entry.at("responses")) {
        scripted->enqueue(tag, response.get<std::string>());
      }
    }
    return scripted;
  }
  if (options.backend == "http") {
    BackendConfig config;
    config.kind = BackendKind::Http;
    config.base_url = options.base_url;
    config.model_name = options.model_name;
    config.api_key_env_var = options.api_key_env;
    config.timeout_ms = options.timeout_ms;
    config.max_retries = options.max_retries;
    config.max_concurrency = options.max_concurrency;
    config.min_request_interval_ms = options.min_interval_ms;
    return make_http_backend(config);
  }
  throw Error(ErrorKind::Usage, "unknown backend '" + options.backend + "'");
}

int cmd_plan(const fs::path& ws_dir, const fs::path& out_dir,
             const PlanOptions& options) {
  Workspace ws = load_workspace(ws_dir);
  auto contexts = load_contexts(ws, out_dir, options.cl_ext);
  if (contexts.empty()) {
    std::cout << "no flagged learners; nothing to plan\n";
    return kExitOk;
  }

  SessionConfig config;
  config.method = plan_method_from_string(options.method);
  for (const auto& flag : options.ablations) config.ablations.insert(flag);
  config.max_plan_versions = options.max_versions;
  config.max_repairs = options.max_repairs;
  if (options.seed_set) config.seed = options.seed;
  auto [low, high] = parse_band(options.load_band);
  config.constraints.band_low = low;
  config.constraints.band_high = high;
  config.constraints.max_path_length = options.max_path_length;
  if (config.method == PlanMethod::Rbm && !config.seed) {
    throw Error(ErrorKind::Usage, "--seed is required for the random baseline");
  }
  if (!config.ablations.empty() && config.method != PlanMethod::Malpp) {
    throw Error(ErrorKind::Usage, "--ablate only applies to method malpp");
  }

  PromptLibrary prompts = PromptLibrary::load(default_asset_dir());
  std::unique_ptr<Backend> backend;
  if (config.method == PlanMethod::Malpp || config.method == PlanMethod::Slmlpp) {
    backend = build_backend(options);
  }
  const std::string label = method_label(config);

  struct Outcome {
    LearningPath path;
    std::optional<AgentTranscript> transcript;
    std::string error;
    int exit_code = kExitOk;
  };
  std::vector<Outcome> outcomes(contexts.size());
  std::atomic<std::size_t> cursor{0};
  std::mutex sink_mutex;

  auto worker = [&] {
    while (true) {
      std::size_t index = cursor.fetch_add(1);
      if (index >= contexts.size()) return;
      const auto& ctx = contexts[index];
      try {
        switch (config.method) {
          case PlanMethod::Malpp: {
            auto result = run_malpp(*backend, prompts, ws, ctx, config);
            outcomes[index] = Outcome{result.path, result.transcript, ""};
            break;
          }
          case PlanMethod::Slmlpp: {
            auto result = run_slmlpp(*backend, prompts, ws, ctx, config);
            outcomes[index] = Outcome{result.path, result.transcript, ""};
            break;
          }
          case PlanMethod::Rbm:
            outcomes[index] = Outcome{run_rbm(ws, ctx, config), std::nullopt, ""};
            break;
          case PlanMethod::Oracle: {
            auto eff = mastery_gap_effectiveness(ctx.state, ws.resources);
            outcomes[index] = Outcome{
                run_oracle(ws, ctx, eff, options.oracle_max_len), std::nullopt, ""};
            break;
          }
        }
      } catch (const SessionError& error) {
        std::lock_guard lock(sink_mutex);
        outcomes[index].error = error.what();
        outcomes[index].exit_code = exit_code_for(error);
        outcomes[index].transcript = error.transcript();
      } catch (const Error& error) {
        std::lock_guard lock(sink_mutex);
        outcomes[index].error = error.what();
        outcomes[index].exit_code = exit_code_for(error);
      }
    }
  };

  int threads = std::max(1, options.parallel);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> workers;
    for (int i = 0; i < threads; ++i) workers.emplace_back(worker);
    for (auto& thread : workers) thread.join();
  }

  int planned = 0;
  int worst_exit = kExitOk;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const auto& outcome = outcomes[i];
    const std::string& learner = contexts[i].profile.learner_id;
    if (outcome.transcript) {
      write_text(out_dir / "transcripts" / (outcome.transcript->session_id + ".json"),
                 transcript_to_json(*outcome.transcript).dump(2) + "\n");
    }
    if (!outcome.error.empty()) {
      std::cerr << learner << ": " << outcome.error << "\n";
      worst_exit = std::max(worst_exit, outcome.exit_code);
      continue;
    }
    write_text(out_dir / "paths" / label / (learner + ".json"),
               path_record_to_json(outcome.path).dump(2) + "\n");
    ++planned;
    if (outcome.transcript) {
      std::cout << outcome.transcript->session_id << ": "
                << outcome.path.nodes.size() << " nodes, tokens prompt="
                << outcome.transcript->total_prompt_tokens << " completion="
                << outcome.transcript->total_completion_tokens << " ("
                << outcome.transcript->outcome << ")\n";
    } else {
      std::cout << label << "-" << learner << ": " << outcome.path.nodes.size()
                << " nodes\n";
    }
  }
  std::cout << "planned " << planned << "/" << contexts.size() << " paths -> "
            << (out_dir / "paths" / label).string() << "\n";
  // Partial results stay on disk whatever went wrong mid-batch.
  return worst_exit;
}

std::map<std::string, std::vector<LearningPath>> load_path_groups(
    const fs::path& paths_dir) {
  std::map<std::string, std::vector<LearningPath>> groups;
  if (!fs::exists(paths_dir)) {
    throw Error(ErrorKind::Io, "missing paths directory " + paths_dir.string());
  }
  for (const auto& method_dir : fs::directory_iterator(paths_dir)) {
    if (!method_dir.is_directory()) continue;
    std::vector<fs::path> files;
    for (const auto& file : fs::directory_iterator(method_dir.path())) {
      if (file.path().extension() == ".json") files.push_back(file.path());
    }
    std::sort(files.begin(), files.end());
    auto& group = groups[method_dir.path().filename().string()];
    for (const auto& file : files) {
      group.push_back(path_record_from_json(read_json_file(file)));
    }
  }
  if (groups.empty()) {
    throw Error(ErrorKind::EmptyBatch,
                "no method directories under " + paths_dir.string());
  }
  return groups;
}

void emit_report(const EvaluationReport& report, const fs::path& out_dir,
                 const std::string& format) {
  write_text(out_dir / "report.json", render_json(report).dump(2) + "\n");
  write_text(out_dir / "report.csv", render_csv(report));
  write_text(out_dir / "report.txt", render_text(report));
  if (format == "json") {
    std::cout << render_json(report).dump(2) << "\n";
  } else if (format == "csv") {
    std::cout << render_csv(report);
  } else {
    std::cout << render_text(report);
  }
}

int cmd_evaluate(const fs::path& ws_dir, const fs::path& out_dir,
                 const std::string& paths_dir, const std::string& ksc_mode,
                 double cl_ext, const std::string& format) {
  Workspace ws = load_workspace(ws_dir);
  fs::path paths = paths_dir.empty() ? out_dir / "paths" : fs::path(paths_dir);
  auto groups = load_path_groups(paths);
  EvaluationConfig config;
  config.ksc_mode = ksc_mode_from_string(ksc_mode);
  config.cl_ext = cl_ext;
  EvaluationReport report = evaluate_batch(ws, groups, config);
  emit_report(report, out_dir, format);
  return kExitOk;
}

int cmd_report(const fs::path& out_dir, const std::string& format) {
  EvaluationReport report =
      evaluation_from_json(read_json_file(out_dir / "report.json"));
  emit_report(report, out_dir, format);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline learning path planning engine"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key=value configuration file");

  std::string workspace_dir;
  std::string out_dir = "out";
  std::string format = "text";
  std::uint64_t global_seed = 0;
  app.add_option("--workspace", workspace_dir, "Workspace directory")
      ->envname("PATHPLAN_WORKSPACE");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--format", format, "Report format: text|csv|json")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  auto* global_seed_option =
      app.add_option("--seed", global_seed, "Fallback seed for synth and plan");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic workspace");
  SynthSpec synth_spec;
  std::string synth_out;
  synth->add_option("--learners", synth_spec.learners)->required();
  synth->add_option("--resources", synth_spec.resources)->required();
  synth->add_option("--kps", synth_spec.knowledge_points)->required();
  auto* synth_seed_option = synth->add_option("--seed", synth_spec.seed);
  synth->add_option("-o,--output", synth_out, "Workspace directory")->required();

  auto* ingest = app.add_subcommand("ingest", "Validate a workspace directory");
  std::string ingest_dir;
  ingest->add_option("dir", ingest_dir, "Workspace directory");

  auto* pipeline = app.add_subcommand(
      "pipeline", "Detect risk, trace knowledge, recommend resources");
  PipelineOptions pipeline_options;
  pipeline->add_option("--risk-threshold", pipeline_options.risk_threshold);
  pipeline->add_option("--weak-threshold", pipeline_options.weak_threshold);
  pipeline->add_option("--list-length", pipeline_options.list_length);

  auto* plan = app.add_subcommand("plan", "Plan paths for flagged learners");
  PlanOptions plan_options;
  plan->add_option("--method", plan_options.method)
      ->check(CLI::IsMember({"malpp", "slmlpp", "rbm", "oracle"}));
  plan->add_option("--backend", plan_options.backend)
      ->check(CLI::IsMember({"mock-rule", "mock-script", "http"}));
  plan->add_option("--ablate", plan_options.ablations,
                   "Ablation flags (comma separated)")
      ->delimiter(',');
  auto* seed_option = plan->add_option("--seed", plan_options.seed);
  plan->add_option("--max-versions", plan_options.max_versions);
  plan->add_option("--max-repairs", plan_options.max_repairs);
  plan->add_option("--max-path-length", plan_options.max_path_length);
  plan->add_option("--load-band", plan_options.load_band, "LOW:HIGH fractions");
  plan->add_option("--cl-ext", plan_options.cl_ext);
  plan->add_option("--parallel", plan_options.parallel);
  plan->add_option("--oracle-max-len", plan_options.oracle_max_len);
  plan->add_option("--script", plan_options.script_file,
                   "Scripted responses for mock-script");
  plan->add_option("--base-url", plan_options.base_url);
  plan->add_option("--model", plan_options.model_name);
  plan->add_option("--api-key-env", plan_options.api_key_env);
  plan->add_option("--timeout-ms", plan_options.timeout_ms);
  plan->add_option("--max-retries", plan_options.max_retries);
  plan->add_option("--max-concurrency", plan_options.max_concurrency,
                   "In-flight request cap for the http backend (0 = none)");
  plan->add_option("--min-interval-ms", plan_options.min_interval_ms,
                   "Minimum spacing between http requests");

  auto* evaluate = app.add_subcommand("evaluate", "Compute the four metrics");
  std::string eval_paths_dir;
  std::string ksc_mode = "as_written";
  double cl_ext = 0.0;
  evaluate->add_option("--paths", eval_paths_dir, "Paths directory");
  evaluate->add_option("--ksc-mode", ksc_mode)
      ->check(CLI::IsMember({"as_written", "aswritten", "normalized"}));
  evaluate->add_option("--cl-ext", cl_ext);

  auto* report = app.add_subcommand("report", "Re-render an existing report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    return app.exit(error) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      if (synth_seed_option->count() == 0) {
        if (global_seed_option->count() == 0) {
          throw Error(ErrorKind::Usage, "synth needs --seed");
        }
        synth_spec.seed = global_seed;
      }
      return cmd_synth(synth_spec, synth_out);
    }
    if (ingest->parsed()) {
      fs::path dir = ingest_dir.empty() ? fs::path(workspace_dir) : fs::path(ingest_dir);
      if (dir.empty()) {
        throw Error(ErrorKind::Usage, "ingest needs a directory argument");
      }
      return cmd_ingest(dir);
    }
    if (workspace_dir.empty() && (pipeline->parsed() || plan->parsed() ||
                                  evaluate->parsed())) {
      throw Error(ErrorKind::Usage, "--workspace is required");
    }
    if (pipeline->parsed()) {
      return cmd_pipeline(workspace_dir, out_dir, pipeline_options);
    }
    if (plan->parsed()) {
      plan_options.seed_set = seed_option->count() > 0;
      if (!plan_options.seed_set && global_seed_option->count() > 0) {
        plan_options.seed = global_seed;
        plan_options.seed_set = true;
      }
      return cmd_plan(workspace_dir, out_dir, plan_options);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(workspace_dir, out_dir, eval_paths_dir, ksc_mode,
                          cl_ext, format);
    }
    if (report->parsed()) {
      return cmd_report(out_dir, format);
    }
  } catch (const Error& error) {
    std::cerr << "error (" << error_kind_name(error.kind()) << "): "
              << error.what() << "\n";
    return exit_code_for(error);
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
