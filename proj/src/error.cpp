#include "catpaw/error.hpp"

namespace catpaw {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Io: return "io_error";
    case ErrorCode::Parse: return "parse_error";
    case ErrorCode::Validation: return "validation_error";
    case ErrorCode::UnknownId: return "unknown_id";
    case ErrorCode::Constraint: return "constraint_error";
    case ErrorCode::MissingEvidence: return "missing_evidence";
    case ErrorCode::EmptyMatrix: return "empty_matrix";
    case ErrorCode::GenerationFailure: return "generation_failure";
    case ErrorCode::Exhausted: return "exhausted_alternatives";
    case ErrorCode::Coverage: return "coverage_error";
    case ErrorCode::UndefinedCorrelation: return "undefined_correlation";
  }
  return "unknown";
}

}  // namespace catpaw
