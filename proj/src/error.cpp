#include "vica/error.hpp"

namespace vica {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidStage: return "invalid-stage";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kInsufficientFrames: return "insufficient-frames";
    case ErrorCode::kEmptySubset: return "empty-subset";
    case ErrorCode::kUnsupportedShape: return "unsupported-shape";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kGeometry: return "geometry";
    case ErrorCode::kVocab: return "vocab";
    case ErrorCode::kEvaluation: return "evaluation";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kKind: return "kind";
    case ErrorCode::kRecord: return "record";
    case ErrorCode::kInput: return "input";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kService: return "service";
  }
  return "unknown";
}

} // namespace vica
