#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathplan/errors.hpp"

namespace pathplan {

enum class BackendKind { Http, MockScripted, MockRuleBased };

struct BackendConfig {
  BackendKind kind = BackendKind::MockRuleBased;
  std::string base_url;         // http only
  std::string model_name;       // http only
  std::string api_key_env_var;  // bearer token source, optional
  int timeout_ms = 30000;
  int max_retries = 3;
  int retry_backoff_ms = 250;
  int max_concurrency = 0;          // 0 = unbounded
  int min_request_interval_ms = 0;  // request pacing
};

struct ChatRequest {
  std::string system_text;
  std::string user_text;
  double temperature = 0.0;  // deterministic by default
  int max_output_tokens = 4096;
  std::string tag;  // "<role>/<session>", keyed into scripts and transcripts
};

struct ChatResponse {
  std::string text;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  long latency_ms = 0;
  int attempts = 1;  // transport attempts, retries included
};

// Rough byte-based token estimate used by the mocks and the accounting.
long estimate_tokens(const std::string& text);

// FNV-1a 64 over a string, hex encoded. Used for payload digests.
std::string digest64(const std::string& text);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// Wire-level seam so retry behavior is testable without sockets.
struct HttpWire {
  std::string url;   // full URL
  std::string body;  // JSON payload
  std::map<std::string, std::string> headers;
  int timeout_ms = 0;
};

struct HttpResult {
  int status = 0;
  std::string body;
  bool transport_error = false;  // timeout / connect failure
  std::string error;
};

using HttpTransport = std::function<HttpResult(const HttpWire&)>;

std::unique_ptr<Backend> make_http_backend(const BackendConfig& config,
                                           HttpTransport transport = nullptr);

// Replays canned responses per tag prefix; throws ScriptExhausted when a
// queue runs dry.
class ScriptedBackend : public Backend {
 public:
  void enqueue(const std::string& tag_prefix, std::string response_text);
  ChatResponse complete(const ChatRequest& request) override;

 private:
  struct Queue {
    std::vector<std::string> responses;
    std::size_t next = 0;
  };
  std::map<std::string, Queue> queues_;
  std::mutex mutex_;
};

// Marker phrases the rule-based mock looks for to decide which pedagogical
// constraints the prompt actually carries. The template blocks embed them.
inline constexpr const char* kCltMarker = "Cognitive load constraint (CLT)";
inline constexpr const char* kZpdMarker =
    "Zone of proximal development constraint (ZPD)";

// Deterministic offline stand-in for a capable model: reads the JSON data
// block embedded in the prompt and synthesizes a schema-valid reply for the
// role named by the request tag.
std::unique_ptr<Backend> make_rule_based_backend();

std::unique_ptr<Backend> make_backend(const BackendConfig& config);

// First balanced JSON object in free text, tolerating code fences and prose.
nlohmann::json extract_json(const std::string& text);

// Minimal JSON Schema interpreter (type/required/properties/items/enum/
// minItems/minimum). Returns "field.path: problem" entries; empty means valid.
std::vector<std::string> validate_schema(const nlohmann::json& payload,
                                         const nlohmann::json& schema);

// extract_json + validate_schema; throws NoJsonFound or SchemaViolation.
nlohmann::json extract_json_validated(const std::string& text,
                                      const nlohmann::json& schema);

struct AttemptRecord {
  std::string system_text;
  std::string user_text;
  std::string response_text;
  bool ok = false;
  std::vector<std::string> errors;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  long latency_ms = 0;
};

using SemanticCheck =
    std::function<std::vector<std::string>(const nlohmann::json&)>;

inline constexpr int kDefaultMaxRepairs = 2;

// Completes the request and insists on a schema-valid payload, re-prompting
// with the validation errors up to max_repairs times. Every attempt lands in
// `attempts`, including the failing ones, so callers keep the transcript even
// when this throws ValidationFailedAfterRepairs.
nlohmann::json complete_validated(Backend& backend, ChatRequest request,
                                  const nlohmann::json& schema,
                                  std::vector<AttemptRecord>& attempts,
                                  int max_repairs = kDefaultMaxRepairs,
                                  SemanticCheck semantic_check = nullptr);

}  // namespace pathplan
