#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace typolab {

enum class ErrorCode {
  kPrecondition,
  kConfig,
  kCorpusParse,
  kDegenerateWord,
  kNoContext,
  kUnknownCharacter,
  kSpanMismatch,
  kValidation,
  kShapeMismatch,
  kChecksumMismatch,
  kFormat,
  kIo,
  kZeroVector,
  kInvalidOriginal,
  kInfiniteDivergence,
  kEmptyPairSet,
  kEmptyInput,
  kBaselineMissing,
  kNoCandidates,
  kPartialSkip,
};

std::string_view error_name(ErrorCode code);

// Every failure in the library surfaces as an Error carrying a code the
// harness maps to exit statuses and skip-log reasons.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }

 private:
  ErrorCode code_;
};

inline std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kPrecondition: return "PreconditionError";
    case ErrorCode::kConfig: return "ConfigurationError";
    case ErrorCode::kCorpusParse: return "CorpusParseError";
    case ErrorCode::kDegenerateWord: return "DegenerateWord";
    case ErrorCode::kNoContext: return "NoContext";
    case ErrorCode::kUnknownCharacter: return "UnknownCharacter";
    case ErrorCode::kSpanMismatch: return "SpanMismatch";
    case ErrorCode::kValidation: return "ValidationError";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kFormat: return "FormatError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kInvalidOriginal: return "InvalidOriginal";
    case ErrorCode::kInfiniteDivergence: return "InfiniteDivergence";
    case ErrorCode::kEmptyPairSet: return "EmptyPairSet";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kBaselineMissing: return "BaselineMissing";
    case ErrorCode::kNoCandidates: return "NoCandidates";
    case ErrorCode::kPartialSkip: return "PartialSkipThresholdExceeded";
  }
  return "Error";
}

}  // namespace typolab
