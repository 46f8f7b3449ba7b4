#pragma once

#include <stdexcept>
#include <string>

namespace catpaw {

enum class ErrorCode {
  InvalidArgument,
  Io,
  Parse,
  Validation,
  UnknownId,
  Constraint,
  MissingEvidence,
  EmptyMatrix,
  GenerationFailure,
  Exhausted,
  Coverage,
  UndefinedCorrelation,
};

const char* error_code_name(ErrorCode code) noexcept;

// Every failure raised by the core carries a machine-readable code and,
// where one exists, the name of the offending field or entry.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace catpaw
