#pragma once

#include <stdexcept>
#include <string>

namespace pathplan {

// One error taxonomy for the whole engine. The CLI maps kinds to exit codes
// (usage -> 1, data -> 2, backend -> 3).
enum class ErrorKind {
  Usage,
  Parse,
  Integrity,
  UnknownLearner,
  InvalidMastery,
  MissingEffectiveness,
  EmptyRecommendation,
  EmptyBatch,
  UndefinedLoad,
  DivisionByZero,
  InstanceTooLarge,
  NoJsonFound,
  SchemaViolation,
  ScriptExhausted,
  RetriesExhausted,
  MissingApiKey,
  ValidationFailedAfterRepairs,
  HallucinatedResource,
  IncompleteContext,
  Backend,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

const char* error_kind_name(ErrorKind kind);

}  // namespace pathplan
