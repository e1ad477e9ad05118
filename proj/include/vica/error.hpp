#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vica {

enum class ErrorCode {
  kInvalidStage,
  kInvalidConfig,
  kInsufficientFrames,
  kEmptySubset,
  kUnsupportedShape,
  kShape,
  kGeometry,
  kVocab,
  kEvaluation,
  kDivergence,
  kKind,
  kRecord,
  kInput,
  kParse,
  kIo,
  kTransport,
  kService,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; the code tells callers (and the CLI
// exit-code mapping) which contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

} // namespace vica
