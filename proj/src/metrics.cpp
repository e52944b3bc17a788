#include "pathplan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace pathplan {

using json = nlohmann::json;

namespace {

double resource_duration(const Workspace& ws,
                         const std::map<std::string, ResourceTimeStat>& stats,
                         const std::string& resource_id, bool* fell_back) {
  auto it = stats.find(resource_id);
  if (it != stats.end()) return it->second.mean_minutes;
  const auto* resource = ws.find_resource(resource_id);
  if (!resource) {
    throw Error(ErrorKind::Integrity,
                "path references unknown resource " + resource_id);
  }
  if (fell_back) *fell_back = true;
  return resource->duration_estimate;
}

double path_mean_duration(const LearningPath& path, const Workspace& ws,
                          const std::map<std::string, ResourceTimeStat>& stats) {
  double total = 0;
  for (const auto& node : path.nodes) {
    total += resource_duration(ws, stats, node.resource_id, nullptr);
  }
  return total / static_cast<double>(path.nodes.size());
}

std::string format2(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.2f", value);
  return buffer;
}

std::string format_delta(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "(%+.2f)", value);
  return buffer;
}

}  // namespace

const char* to_string(KscMode mode) {
  return mode == KscMode::AsWritten ? "as_written" : "normalized";
}

KscMode ksc_mode_from_string(const std::string& text) {
  if (text == "as_written" || text == "aswritten") return KscMode::AsWritten;
  if (text == "normalized") return KscMode::Normalized;
  throw Error(ErrorKind::Usage, "unknown ksc mode '" + text + "'");
}

double apl(const std::vector<LearningPath>& paths) {
  if (paths.empty()) throw Error(ErrorKind::EmptyBatch, "apl over empty batch");
  double total = 0;
  for (const auto& path : paths) total += static_cast<double>(path.nodes.size());
  return total / static_cast<double>(paths.size());
}

double ald(const std::vector<LearningPath>& paths, const Workspace& ws) {
  if (paths.empty()) throw Error(ErrorKind::EmptyBatch, "ald over empty batch");
  auto stats = resource_time_stats(ws);
  double total = 0;
  for (const auto& path : paths) {
    if (path.nodes.empty()) {
      throw Error(ErrorKind::EmptyBatch, "ald over empty path");
    }
    total += path_mean_duration(path, ws, stats);
  }
  return total / static_cast<double>(paths.size());
}

CognitiveLoadProfile student_load(const Workspace& ws,
                                  const std::string& learner_id,
                                  double cl_ext) {
  auto stats = learner_time_stats(ws, learner_id);
  if (stats.per_resource_minutes.empty()) {
    throw Error(ErrorKind::UndefinedLoad,
                "learner " + learner_id + " has no studied resources");
  }
  CognitiveLoadProfile profile;
  profile.cl_ext = cl_ext;
  double total = 0;
  for (const auto& [resource_id, minutes] : stats.per_resource_minutes) {
    total += minutes;
  }
  profile.cl_int =
      total / static_cast<double>(stats.per_resource_minutes.size());
  if (stats.active_days > 0) {
    double forum = std::accumulate(stats.forum_minutes_by_day.begin(),
                                   stats.forum_minutes_by_day.end(), 0.0);
    profile.cl_ger = forum / static_cast<double>(stats.active_days);
  }
  profile.cl_student = profile.cl_int + profile.cl_ger + profile.cl_ext;
  return profile;
}

PathLoad path_load(const LearningPath& path, const Workspace& ws) {
  auto stats = resource_time_stats(ws);
  PathLoad load;
  if (path.nodes.empty()) return load;
  double total = 0;
  for (const auto& node : path.nodes) {
    bool fell_back = false;
    total += resource_duration(ws, stats, node.resource_id, &fell_back);
    if (fell_back) ++load.fallback_nodes;
  }
  load.minutes = total / static_cast<double>(path.nodes.size());
  return load;
}

double signed_misalignment(double cl_student, double cl_path) {
  if (cl_student <= 0) {
    throw Error(ErrorKind::DivisionByZero,
                "signed misalignment needs positive capacity");
  }
  return (cl_student - cl_path) / cl_student;
}

ClmrResult clmr(const std::vector<std::pair<double, double>>& pairs) {
  ClmrResult result;
  if (pairs.empty()) throw Error(ErrorKind::EmptyBatch, "clmr over empty batch");
  double total = 0;
  for (const auto& [cl_student, cl_path] : pairs) {
    double value = signed_misalignment(cl_student, cl_path);
    result.signed_values.push_back(value);
    total += std::fabs(value);
  }
  result.aggregate = total / static_cast<double>(pairs.size());
  return result;
}

double ksc_path(const LearningPath& path, const Workspace& ws, KscMode mode) {
  if (path.nodes.empty()) {
    throw Error(ErrorKind::EmptyBatch, "ksc over empty path");
  }
  if (path.nodes.size() == 1) return 0.5;
  std::vector<double> difficulty;
  difficulty.reserve(path.nodes.size());
  for (const auto& node : path.nodes) {
    const auto* resource = ws.find_resource(node.resource_id);
    if (!resource) {
      throw Error(ErrorKind::Integrity,
                  "path references unknown resource " + node.resource_id);
    }
    difficulty.push_back(resource_difficulty(*resource, ws.graph));
  }
  int increasing = 0;
  for (std::size_t i = 0; i + 1 < difficulty.size(); ++i) {
    if (difficulty[i] < difficulty[i + 1]) ++increasing;
  }
  double denom = mode == KscMode::AsWritten
                     ? static_cast<double>(path.nodes.size())
                     : static_cast<double>(path.nodes.size() - 1);
  return static_cast<double>(increasing) / denom;
}

double ksc(const std::vector<LearningPath>& paths, const Workspace& ws,
           KscMode mode) {
  if (paths.empty()) throw Error(ErrorKind::EmptyBatch, "ksc over empty batch");
  double total = 0;
  for (const auto& path : paths) total += ksc_path(path, ws, mode);
  return total / static_cast<double>(paths.size());
}

EvaluationReport evaluate_batch(
    const Workspace& ws,
    const std::map<std::string, std::vector<LearningPath>>& by_method,
    const EvaluationConfig& config) {
  EvaluationReport report;
  report.config = config;
  auto stats = resource_time_stats(ws);

  for (const auto& [method, paths] : by_method) {
    if (paths.empty()) {
      throw Error(ErrorKind::EmptyBatch, "method " + method + " has no paths");
    }
    MethodRow row;
    row.method = method;
    row.n_paths = static_cast<int>(paths.size());
    row.apl = apl(paths);
    row.ald_minutes = ald(paths, ws);
    row.ksc_percent = 100.0 * ksc(paths, ws, config.ksc_mode);

    std::vector<std::pair<double, double>> pairs;
    for (const auto& path : paths) {
      PathDetail detail;
      detail.method = method;
      detail.learner_id = path.learner_id;
      detail.length = static_cast<int>(path.nodes.size());
      detail.ald_minutes = path_mean_duration(path, ws, stats);
      detail.ksc = ksc_path(path, ws, config.ksc_mode);
      auto load = path_load(path, ws);
      detail.fallback_nodes = load.fallback_nodes;
      row.load_fallback_nodes += load.fallback_nodes;

      std::optional<double> capacity;
      try {
        capacity = student_load(ws, path.learner_id, config.cl_ext).cl_student;
      } catch (const Error& error) {
        if (error.kind() != ErrorKind::UndefinedLoad) throw;
      }
      if (capacity && *capacity > 0) {
        detail.clmr_signed = signed_misalignment(*capacity, load.minutes);
        pairs.emplace_back(*capacity, load.minutes);
      } else {
        ++row.n_excluded_learners;
      }
      report.paths.push_back(std::move(detail));
    }
    if (!pairs.empty()) {
      row.clmr_percent = 100.0 * clmr(pairs).aggregate;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string render_text(const EvaluationReport& report) {
  std::ostringstream os;
  os << "Learning path evaluation (ksc_mode=" << to_string(report.config.ksc_mode)
     << ", cl_ext=" << format2(report.config.cl_ext) << ")\n";
  os << "method                     apl      ald_min    ksc_pct    clmr_pct   paths  excluded\n";
  os << "-------------------------  -------  ---------  ---------  ---------  -----  --------\n";
  char line[256];
  for (const auto& row : report.rows) {
    std::string clmr_text =
        row.clmr_percent ? format2(*row.clmr_percent) : std::string("n/a");
    std::snprintf(line, sizeof(line), "%-25s  %7.2f  %9.2f  %9.2f  %9s  %5d  %8d\n",
                  row.method.c_str(), row.apl, row.ald_minutes, row.ksc_percent,
                  clmr_text.c_str(), row.n_paths, row.n_excluded_learners);
    os << line;
  }

  // Ablation deltas against the plain malpp row, in the paper's table style:
  // positive means the variant helped, negative means it hurt.
  const MethodRow* base = nullptr;
  for (const auto& row : report.rows) {
    if (row.method == "malpp") base = &row;
  }
  bool has_variants = false;
  for (const auto& row : report.rows) {
    if (row.method.rfind("malpp+", 0) == 0) has_variants = true;
  }
  if (base && has_variants) {
    os << "\nAblation deltas vs malpp\n";
    os << "method                     ksc_pct             clmr_pct\n";
    os << "-------------------------  ------------------  ------------------\n";
    for (const auto& row : report.rows) {
      if (row.method.rfind("malpp+", 0) != 0) continue;
      std::string ksc_cell = format2(row.ksc_percent) + " " +
                             format_delta(row.ksc_percent - base->ksc_percent);
      std::string clmr_cell = "n/a";
      if (row.clmr_percent && base->clmr_percent) {
        // CLMR is lower-better, so the delta flips sign.
        clmr_cell = format2(*row.clmr_percent) + " " +
                    format_delta(*base->clmr_percent - *row.clmr_percent);
      }
      std::snprintf(line, sizeof(line), "%-25s  %-18s  %-18s\n",
                    row.method.c_str(), ksc_cell.c_str(), clmr_cell.c_str());
      os << line;
    }
  }
  return os.str();
}

std::string render_csv(const EvaluationReport& report) {
  std::ostringstream os;
  os << "method,apl,ald_minutes,ksc_percent,clmr_percent,n_paths,n_excluded_learners\n";
  for (const auto& row : report.rows) {
    os << row.method << ',' << format2(row.apl) << ',' << format2(row.ald_minutes)
       << ',' << format2(row.ksc_percent) << ','
       << (row.clmr_percent ? format2(*row.clmr_percent) : std::string())
       << ',' << row.n_paths << ',' << row.n_excluded_learners << '\n';
  }
  return os.str();
}

json render_json(const EvaluationReport& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    json entry{{"method", row.method},
               {"apl", row.apl},
               {"ald_minutes", row.ald_minutes},
               {"ksc_percent", row.ksc_percent},
               {"n_paths", row.n_paths},
               {"n_excluded_learners", row.n_excluded_learners},
               {"load_fallback_nodes", row.load_fallback_nodes}};
    entry["clmr_percent"] =
        row.clmr_percent ? json(*row.clmr_percent) : json(nullptr);
    rows.push_back(std::move(entry));
  }
  json paths = json::array();
  for (const auto& detail : report.paths) {
    json entry{{"method", detail.method},
               {"learner_id", detail.learner_id},
               {"length", detail.length},
               {"ald_minutes", detail.ald_minutes},
               {"ksc", detail.ksc},
               {"fallback_nodes", detail.fallback_nodes}};
    entry["clmr_signed"] =
        detail.clmr_signed ? json(*detail.clmr_signed) : json(nullptr);
    paths.push_back(std::move(entry));
  }
  return json{{"ksc_mode", to_string(report.config.ksc_mode)},
              {"cl_ext", report.config.cl_ext},
              {"rows", rows},
              {"paths", paths}};
}

EvaluationReport evaluation_from_json(const json& record) {
  EvaluationReport report;
  report.config.ksc_mode =
      ksc_mode_from_string(record.at("ksc_mode").get<std::string>());
  report.config.cl_ext = record.at("cl_ext").get<double>();
  for (const auto& item : record.at("rows")) {
    MethodRow row;
    row.method = item.at("method").get<std::string>();
    row.apl = item.at("apl").get<double>();
    row.ald_minutes = item.at("ald_minutes").get<double>();
    row.ksc_percent = item.at("ksc_percent").get<double>();
    if (!item.at("clmr_percent").is_null()) {
      row.clmr_percent = item.at("clmr_percent").get<double>();
    }
    row.n_paths = item.at("n_paths").get<int>();
    row.n_excluded_learners = item.at("n_excluded_learners").get<int>();
    row.load_fallback_nodes = item.value("load_fallback_nodes", 0);
    report.rows.push_back(std::move(row));
  }
  for (const auto& item : record.at("paths")) {
    PathDetail detail;
    detail.method = item.at("method").get<std::string>();
    detail.learner_id = item.at("learner_id").get<std::string>();
    detail.length = item.at("length").get<int>();
    detail.ald_minutes = item.at("ald_minutes").get<double>();
    detail.ksc = item.at("ksc").get<double>();
    if (!item.at("clmr_signed").is_null()) {
      detail.clmr_signed = item.at("clmr_signed").get<double>();
    }
    detail.fallback_nodes = item.value("fallback_nodes", 0);
    report.paths.push_back(std::move(detail));
  }
  return report;
}

}  // namespace pathplan
