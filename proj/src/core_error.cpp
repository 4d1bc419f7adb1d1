#include "kfvio/core/error.hpp"

namespace kfvio {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kConfig: return "config-error";
    case ErrorCode::kIo: return "io-error";
    case ErrorCode::kParse: return "parse-error";
    case ErrorCode::kCapacity: return "capacity-error";
    case ErrorCode::kNotFound: return "not-found";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kIndefiniteMatrix: return "indefinite-matrix";
    case ErrorCode::kBehindCamera: return "behind-camera";
    case ErrorCode::kTooFar: return "too-far";
    case ErrorCode::kMaskedWrite: return "masked-write";
    case ErrorCode::kStream: return "stream-error";
    case ErrorCode::kDegenerateScenario: return "degenerate-scenario";
  }
  return "unknown-error";
}

}  // namespace kfvio
