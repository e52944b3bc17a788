#include "pathplan/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <httplib.h>

namespace pathplan {

using json = nlohmann::json;

long estimate_tokens(const std::string& text) {
  return static_cast<long>((text.size() + 3) / 4);
}

std::string digest64(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

namespace {

class HttpBackend : public Backend {
 public:
  HttpBackend(BackendConfig config, HttpTransport transport)
      : config_(std::move(config)), transport_(std::move(transport)) {
    if (config_.base_url.empty() || config_.model_name.empty()) {
      throw Error(ErrorKind::Usage,
                  "http backend requires base_url and model_name");
    }
    if (!config_.api_key_env_var.empty()) {
      const char* key = std::getenv(config_.api_key_env_var.c_str());
      if (!key || !*key) {
        throw Error(ErrorKind::MissingApiKey,
                    "environment variable " + config_.api_key_env_var +
                        " is not set");
      }
      api_key_ = key;
    }
    if (!transport_) transport_ = default_transport();
  }

  ChatResponse complete(const ChatRequest& request) override {
    Slot slot(*this);
    auto started = std::chrono::steady_clock::now();

    json body{{"model", config_.model_name},
              {"messages",
               json::array({json{{"role", "system"}, {"content", request.system_text}},
                            json{{"role", "user"}, {"content", request.user_text}}})},
              {"temperature", request.temperature},
              {"max_tokens", request.max_output_tokens}};

    HttpWire wire;
    wire.url = config_.base_url + "/chat/completions";
    wire.body = body.dump();
    wire.headers["Content-Type"] = "application/json";
    if (!api_key_.empty()) wire.headers["Authorization"] = "Bearer " + api_key_;
    wire.timeout_ms = config_.timeout_ms;

    HttpResult result;
    int attempts = 0;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      attempts = attempt + 1;
      result = transport_(wire);
      if (!should_retry(result)) break;
      if (attempt == config_.max_retries) {
        throw Error(ErrorKind::RetriesExhausted,
                    "request failed after " + std::to_string(attempts) +
                        " attempts: " + describe(result));
      }
      auto delay = std::chrono::milliseconds(
          static_cast<long>(config_.retry_backoff_ms) * (1L << attempt));
      std::this_thread::sleep_for(delay);
    }
    if (result.transport_error || result.status < 200 || result.status >= 300) {
      throw Error(ErrorKind::Backend, "chat completion failed: " + describe(result));
    }

    json payload = json::parse(result.body, nullptr, false);
    if (payload.is_discarded()) {
      throw Error(ErrorKind::Backend, "chat completion returned non-JSON body");
    }
    ChatResponse response;
    response.attempts = attempts;
    try {
      const auto& choice = payload.at("choices").at(0);
      if (choice.contains("message")) {
        response.text = choice.at("message").at("content").get<std::string>();
      } else {
        response.text = choice.at("text").get<std::string>();
      }
    } catch (const json::exception&) {
      throw Error(ErrorKind::Backend, "chat completion body lacks choices[0]");
    }
    if (payload.contains("usage")) {
      response.prompt_tokens = payload["usage"].value("prompt_tokens", 0L);
      response.completion_tokens = payload["usage"].value("completion_tokens", 0L);
    } else {
      response.prompt_tokens =
          estimate_tokens(request.system_text) + estimate_tokens(request.user_text);
      response.completion_tokens = estimate_tokens(response.text);
    }
    response.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();
    return response;
  }

 private:
  // RAII guard for the concurrency cap and request pacing.
  class Slot {
   public:
    explicit Slot(HttpBackend& owner) : owner_(owner) {
      std::unique_lock lock(owner_.mutex_);
      if (owner_.config_.max_concurrency > 0) {
        owner_.cv_.wait(lock, [&] {
          return owner_.in_flight_ < owner_.config_.max_concurrency;
        });
      }
      ++owner_.in_flight_;
      if (owner_.config_.min_request_interval_ms > 0) {
        auto interval =
            std::chrono::milliseconds(owner_.config_.min_request_interval_ms);
        while (true) {
          auto earliest = owner_.last_request_ + interval;
          if (std::chrono::steady_clock::now() >= earliest) break;
          lock.unlock();
          std::this_thread::sleep_until(earliest);
          lock.lock();
        }
        owner_.last_request_ = std::chrono::steady_clock::now();
      }
    }
    ~Slot() {
      std::lock_guard lock(owner_.mutex_);
      --owner_.in_flight_;
      owner_.cv_.notify_one();
    }

   private:
    HttpBackend& owner_;
  };

  static bool should_retry(const HttpResult& result) {
    if (result.transport_error) return true;
    return result.status == 408 || result.status == 429 || result.status >= 500;
  }

  static std::string describe(const HttpResult& result) {
    if (result.transport_error) {
      return result.error.empty() ? "transport error" : result.error;
    }
    return "HTTP " + std::to_string(result.status);
  }

  HttpTransport default_transport() {
    return [this](const HttpWire& wire) -> HttpResult {
      auto split = wire.url.find('/', wire.url.find("//") + 2);
      std::string origin =
          split == std::string::npos ? wire.url : wire.url.substr(0, split);
      std::string path = split == std::string::npos ? "/" : wire.url.substr(split);
      httplib::Client client(origin);
      client.set_connection_timeout(wire.timeout_ms / 1000,
                                    (wire.timeout_ms % 1000) * 1000);
      client.set_read_timeout(wire.timeout_ms / 1000,
                              (wire.timeout_ms % 1000) * 1000);
      httplib::Headers headers;
      for (const auto& [name, value] : wire.headers) {
        if (name != "Content-Type") headers.emplace(name, value);
      }
      auto result = client.Post(path, headers, wire.body, "application/json");
      if (!result) {
        return HttpResult{0, "", true, httplib::to_string(result.error())};
      }
      return HttpResult{result->status, result->body, false, ""};
    };
  }

  BackendConfig config_;
  HttpTransport transport_;
  std::string api_key_;
  std::mutex mutex_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  std::chrono::steady_clock::time_point last_request_{};
};

std::string role_of_tag(const std::string& tag) {
  auto slash = tag.find('/');
  return slash == std::string::npos ? tag : tag.substr(0, slash);
}

double node_mean(const std::vector<double>& values) {
  double total = 0;
  for (double v : values) total += v;
  return values.empty() ? 0.0 : total / static_cast<double>(values.size());
}

// Offline model stand-in. All decisions derive from the JSON data block the
// prompt embeds plus the constraint markers present in the prompt text, so
// ablations change its behavior the same way they would steer a real model.
class RuleBasedBackend : public Backend {
 public:
  ChatResponse complete(const ChatRequest& request) override {
    json data;
    try {
      data = extract_json(request.user_text);
    } catch (const Error&) {
      throw Error(ErrorKind::Backend,
                  "rule-based mock: prompt carries no data block");
    }
    std::string role = role_of_tag(request.tag);
    json payload;
    if (role == "analytics") {
      payload = make_report(data);
    } else if (role == "planner" || role == "slmlpp") {
      payload = make_plan(data, request.user_text);
    } else if (role == "reflector") {
      payload = make_reflection(data, request.user_text);
    } else {
      throw Error(ErrorKind::Backend,
                  "rule-based mock: unknown role tag '" + role + "'");
    }
    ChatResponse response;
    response.text = "Here is the requested JSON:\n```json\n" +
                    payload.dump(2) + "\n```";
    response.prompt_tokens =
        estimate_tokens(request.system_text) + estimate_tokens(request.user_text);
    response.completion_tokens = estimate_tokens(response.text);
    response.latency_ms = 0;
    return response;
  }

 private:
  struct Candidate {
    std::string id;
    double difficulty = 0;
    double load = 0;
    std::vector<std::string> gap_kps;
  };

  static json make_report(const json& data) {
    std::vector<std::string> mastered, weak, unlearned;
    for (const auto& [kp, status] : data.at("knowledge_state").at("status").items()) {
      std::string s = status.get<std::string>();
      if (s == "mastered") mastered.push_back(kp);
      else if (s == "weak") weak.push_back(kp);
      else unlearned.push_back(kp);
    }
    std::ostringstream risk;
    risk << "Flagged at week " << data.value("alert_week", 0) << " with "
         << weak.size() << " weak and " << unlearned.size()
         << " unlearned knowledge points.";
    return json{{"mastered", mastered},
                {"weak", weak},
                {"unlearned", unlearned},
                {"preferences", "Prefers short, regular study sessions with "
                                "immediate practice."},
                {"risk_summary", risk.str()}};
  }

  static std::vector<Candidate> gather_candidates(const json& data) {
    std::vector<std::string> weak, unlearned;
    for (const auto& [kp, status] : data.at("knowledge_state").at("status").items()) {
      std::string s = status.get<std::string>();
      if (s == "weak") weak.push_back(kp);
      else if (s == "unlearned") unlearned.push_back(kp);
    }
    auto covering = [&](const std::vector<std::string>& targets) {
      std::vector<Candidate> out;
      for (const auto& resource : data.at("resources")) {
        Candidate candidate;
        candidate.id = resource.at("id").get<std::string>();
        candidate.difficulty = resource.value("difficulty", 0.0);
        candidate.load = resource.value("load_minutes",
                                        resource.value("duration_estimate", 0.0));
        for (const auto& kp : resource.at("knowledge_ids")) {
          if (std::find(targets.begin(), targets.end(), kp.get<std::string>()) !=
              targets.end()) {
            candidate.gap_kps.push_back(kp.get<std::string>());
          }
        }
        if (!candidate.gap_kps.empty()) out.push_back(std::move(candidate));
      }
      return out;
    };
    auto out = covering(weak);
    if (out.empty()) out = covering(unlearned);
    if (out.empty()) {
      for (const auto& resource : data.at("resources")) {
        Candidate candidate;
        candidate.id = resource.at("id").get<std::string>();
        candidate.difficulty = resource.value("difficulty", 0.0);
        candidate.load = resource.value("load_minutes",
                                        resource.value("duration_estimate", 0.0));
        out.push_back(std::move(candidate));
      }
    }
    return out;
  }

  static json make_plan(const json& data, const std::string& prompt_text) {
    bool honor_zpd = prompt_text.find(kZpdMarker) != std::string::npos;
    bool honor_clt = prompt_text.find(kCltMarker) != std::string::npos;

    // Selection is constraint-independent: gap resources in recommendation
    // order, capped at the length limit. The constraint blocks then only
    // reshape (CLT) or reorder (ZPD) that selection.
    auto candidates = gather_candidates(data);
    int max_len = data.value("max_path_length", 10);
    if (static_cast<int>(candidates.size()) > max_len) {
      candidates.resize(static_cast<std::size_t>(max_len));
    }

    if (honor_clt && data.contains("capacity_minutes") &&
        data.at("capacity_minutes").is_number()) {
      double capacity = data.at("capacity_minutes").get<double>();
      double low = data.at("load_band").value("low", 0.8) * capacity;
      double high = data.at("load_band").value("high", 1.2) * capacity;
      auto loads = [&] {
        std::vector<double> out;
        for (const auto& c : candidates) out.push_back(c.load);
        return out;
      };
      // Shed the heaviest node while the average load overshoots the band,
      // then the lightest while it undershoots.
      while (candidates.size() > 1 && node_mean(loads()) > high) {
        auto heaviest = std::max_element(
            candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.load < b.load; });
        candidates.erase(heaviest);
      }
      while (candidates.size() > 1 && node_mean(loads()) < low) {
        auto lightest = std::min_element(
            candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.load < b.load; });
        candidates.erase(lightest);
      }
    }

    if (honor_zpd) {
      std::stable_sort(candidates.begin(), candidates.end(),
                       [](const Candidate& a, const Candidate& b) {
                         if (a.difficulty != b.difficulty) {
                           return a.difficulty < b.difficulty;
                         }
                         return a.id < b.id;
                       });
    }

    json nodes = json::array();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const auto& candidate = candidates[i];
      std::string rationale;
      if (candidate.gap_kps.empty()) {
        rationale = "Reinforces the course fundamentals.";
      } else {
        rationale = "Addresses knowledge gaps: ";
        for (std::size_t k = 0; k < candidate.gap_kps.size(); ++k) {
          if (k > 0) rationale += ", ";
          rationale += candidate.gap_kps[k];
        }
        rationale += ".";
      }
      nodes.push_back(json{{"resource_id", candidate.id},
                           {"position", static_cast<int>(i) + 1},
                           {"local_rationale", rationale},
                           {"estimated_minutes", candidate.load},
                           {"repeat", false}});
    }
    std::ostringstream global;
    global << "Selected " << nodes.size()
           << " resources that target the learner's weakest knowledge points";
    if (honor_zpd) global << ", ordered by non-decreasing difficulty";
    if (honor_clt) global << ", trimmed to the learner's cognitive capacity";
    global << ".";
    return json{{"path", nodes}, {"global_rationale", global.str()}};
  }

  static json make_reflection(const json& data, const std::string& prompt_text) {
    bool check_zpd = prompt_text.find(kZpdMarker) != std::string::npos;
    bool check_clt = prompt_text.find(kCltMarker) != std::string::npos;

    std::map<std::string, double> difficulty;
    for (const auto& resource : data.at("resources")) {
      difficulty[resource.at("id").get<std::string>()] =
          resource.value("difficulty", 0.0);
    }
    const auto& nodes = data.at("path").at("nodes");

    std::string clt_verdict = "pass";
    std::string zpd_verdict = "pass";
    json suggestions = json::array();

    if (check_clt && data.contains("capacity_minutes") &&
        data.at("capacity_minutes").is_number() && !nodes.empty()) {
      double capacity = data.at("capacity_minutes").get<double>();
      double low = data.at("load_band").value("low", 0.8) * capacity;
      double high = data.at("load_band").value("high", 1.2) * capacity;
      std::vector<double> loads;
      for (const auto& node : nodes) {
        loads.push_back(node.value("estimated_minutes", 0.0));
      }
      double mean = node_mean(loads);
      if (mean > high) {
        clt_verdict = "overload";
        auto heaviest = std::max_element(loads.begin(), loads.end());
        suggestions.push_back(json{
            {"category", "clt"},
            {"description",
             "Average node load exceeds the learner's capacity band; drop or "
             "split the heaviest resource."},
            {"positions", json::array({static_cast<int>(heaviest - loads.begin()) + 1})}});
      } else if (mean < low) {
        clt_verdict = "underload";
        auto lightest = std::min_element(loads.begin(), loads.end());
        suggestions.push_back(json{
            {"category", "clt"},
            {"description",
             "Average node load sits below the learner's capacity band; "
             "replace the lightest resource with a more substantial one."},
            {"positions", json::array({static_cast<int>(lightest - loads.begin()) + 1})}});
      }
    }

    if (check_zpd) {
      std::vector<int> breaks;
      for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        double a = difficulty.count(nodes[i].at("resource_id").get<std::string>())
                       ? difficulty[nodes[i].at("resource_id").get<std::string>()]
                       : 0.0;
        double b =
            difficulty.count(nodes[i + 1].at("resource_id").get<std::string>())
                ? difficulty[nodes[i + 1].at("resource_id").get<std::string>()]
                : 0.0;
        if (a > b) breaks.push_back(static_cast<int>(i) + 2);
      }
      if (!breaks.empty()) {
        zpd_verdict = "non_progressive";
        suggestions.push_back(json{
            {"category", "zpd"},
            {"description",
             "Difficulty decreases along the path; reorder so each step "
             "builds on the previous one."},
            {"positions", breaks}});
      }
    }

    bool accepted = suggestions.empty();
    return json{{"accepted", accepted},
                {"clt_verdict", clt_verdict},
                {"zpd_verdict", zpd_verdict},
                {"suggestions", suggestions}};
  }
};

}  // namespace

std::unique_ptr<Backend> make_http_backend(const BackendConfig& config,
                                           HttpTransport transport) {
  return std::make_unique<HttpBackend>(config, std::move(transport));
}

void ScriptedBackend::enqueue(const std::string& tag_prefix,
                              std::string response_text) {
  std::lock_guard lock(mutex_);
  queues_[tag_prefix].responses.push_back(std::move(response_text));
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  Queue* queue = nullptr;
  std::string best_key;
  for (auto& [key, q] : queues_) {
    bool matches = key == "*" || request.tag.rfind(key, 0) == 0;
    if (matches && (queue == nullptr || key.size() > best_key.size())) {
      queue = &q;
      best_key = key;
    }
  }
  if (!queue) {
    throw Error(ErrorKind::ScriptExhausted,
                "no script registered for tag '" + request.tag + "'");
  }
  if (queue->next >= queue->responses.size()) {
    throw Error(ErrorKind::ScriptExhausted,
                "script for '" + best_key + "' exhausted after " +
                    std::to_string(queue->responses.size()) + " responses");
  }
  ChatResponse response;
  response.text = queue->responses[queue->next++];
  response.prompt_tokens =
      estimate_tokens(request.system_text) + estimate_tokens(request.user_text);
  response.completion_tokens = estimate_tokens(response.text);
  response.latency_ms = 0;
  return response;
}

std::unique_ptr<Backend> make_rule_based_backend() {
  return std::make_unique<RuleBasedBackend>();
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  switch (config.kind) {
    case BackendKind::Http: return make_http_backend(config);
    case BackendKind::MockScripted: return std::make_unique<ScriptedBackend>();
    case BackendKind::MockRuleBased: return make_rule_based_backend();
  }
  throw Error(ErrorKind::Usage, "unknown backend kind");
}

json extract_json(const std::string& text) {
  std::size_t start = 0;
  while ((start = text.find('{', start)) != std::string::npos) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}') {
        if (--depth == 0) {
          json parsed = json::parse(text.substr(start, i - start + 1), nullptr, false);
          if (!parsed.is_discarded()) return parsed;
          break;  // balanced but unparsable; keep scanning
        }
      }
    }
    ++start;
  }
  throw Error(ErrorKind::NoJsonFound, "no balanced JSON object in response");
}

namespace {

const char* json_type_name(const json& value) {
  if (value.is_object()) return "object";
  if (value.is_array()) return "array";
  if (value.is_string()) return "string";
  if (value.is_boolean()) return "boolean";
  if (value.is_number_integer() || value.is_number_unsigned()) return "integer";
  if (value.is_number()) return "number";
  if (value.is_null()) return "null";
  return "unknown";
}

bool type_matches(const json& value, const std::string& type) {
  if (type == "object") return value.is_object();
  if (type == "array") return value.is_array();
  if (type == "string") return value.is_string();
  if (type == "boolean") return value.is_boolean();
  if (type == "integer") return value.is_number_integer() || value.is_number_unsigned();
  if (type == "number") return value.is_number();
  return true;
}

void check_schema(const json& value, const json& schema, const std::string& path,
                  std::vector<std::string>& out) {
  std::string where = path.empty() ? "$" : path;
  if (schema.contains("type")) {
    std::string type = schema.at("type").get<std::string>();
    if (!type_matches(value, type)) {
      out.push_back(where + ": expected " + type + ", got " + json_type_name(value));
      return;
    }
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& option : schema.at("enum")) {
      if (option == value) { found = true; break; }
    }
    if (!found) {
      out.push_back(where + ": value " + value.dump() + " not in enum");
      return;
    }
  }
  if (schema.contains("minimum") && value.is_number()) {
    if (value.get<double>() < schema.at("minimum").get<double>()) {
      out.push_back(where + ": value below minimum " + schema.at("minimum").dump());
    }
  }
  if (value.is_object()) {
    for (const auto& required : schema.value("required", json::array())) {
      if (!value.contains(required.get<std::string>())) {
        out.push_back(where + ": missing required field '" +
                      required.get<std::string>() + "'");
      }
    }
    if (schema.contains("properties")) {
      for (const auto& [name, sub] : schema.at("properties").items()) {
        if (value.contains(name)) {
          std::string child = path.empty() ? name : path + "." + name;
          check_schema(value.at(name), sub, child, out);
        }
      }
    }
  }
  if (value.is_array()) {
    if (schema.contains("minItems") &&
        value.size() < schema.at("minItems").get<std::size_t>()) {
      out.push_back(where + ": fewer than " + schema.at("minItems").dump() +
                    " items");
    }
    if (schema.contains("items")) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        std::string child = (path.empty() ? std::string("$") : path) + "[" +
                            std::to_string(i) + "]";
        check_schema(value[i], schema.at("items"), child, out);
      }
    }
  }
}

}  // namespace

std::vector<std::string> validate_schema(const json& payload, const json& schema) {
  std::vector<std::string> violations;
  check_schema(payload, schema, "", violations);
  return violations;
}

json extract_json_validated(const std::string& text, const json& schema) {
  json payload = extract_json(text);
  auto violations = validate_schema(payload, schema);
  if (!violations.empty()) {
    std::string message = "schema violations:";
    for (const auto& v : violations) message += "\n  " + v;
    throw Error(ErrorKind::SchemaViolation, message);
  }
  return payload;
}

json complete_validated(Backend& backend, ChatRequest request,
                        const json& schema,
                        std::vector<AttemptRecord>& attempts, int max_repairs,
                        SemanticCheck semantic_check) {
  if (max_repairs < 0) {
    throw Error(ErrorKind::Usage, "max_repairs must be >= 0");
  }
  const std::string original_user = request.user_text;
  std::vector<std::string> last_errors;

  for (int attempt = 0; attempt <= max_repairs; ++attempt) {
    ChatResponse response = backend.complete(request);
    AttemptRecord record;
    record.system_text = request.system_text;
    record.user_text = request.user_text;
    record.response_text = response.text;
    record.prompt_tokens = response.prompt_tokens;
    record.completion_tokens = response.completion_tokens;
    record.latency_ms = response.latency_ms;

    std::vector<std::string> errors;
    json payload;
    try {
      payload = extract_json(response.text);
      errors = validate_schema(payload, schema);
      if (errors.empty() && semantic_check) errors = semantic_check(payload);
    } catch (const Error& error) {
      errors.push_back(error.what());
    }

    record.errors = errors;
    record.ok = errors.empty();
    attempts.push_back(std::move(record));
    if (errors.empty()) return payload;
    last_errors = errors;

    std::string repair = original_user;
    repair += "\n\nYour previous reply could not be used. Problems:\n";
    for (const auto& error : errors) repair += "- " + error + "\n";
    repair +=
        "Reply again with exactly one valid JSON object matching the schema. "
        "Output only the JSON object.";
    request.user_text = repair;
  }

  std::string message = "no valid payload after " +
                        std::to_string(max_repairs + 1) + " attempts:";
  for (const auto& error : last_errors) message += "\n  " + error;
  throw Error(ErrorKind::ValidationFailedAfterRepairs, message);
}

}  // namespace pathplan
