#include "bevstream/error.hpp"

namespace bevstream {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShape: return "shape error";
    case ErrorCode::kInvalidGeometry: return "invalid geometry";
    case ErrorCode::kUnsupportedKernel: return "unsupported kernel";
    case ErrorCode::kInsufficientHistory: return "insufficient history";
    case ErrorCode::kStreamOrder: return "stream order error";
    case ErrorCode::kEmptyStream: return "empty stream";
    case ErrorCode::kInvalidInterval: return "invalid interval";
    case ErrorCode::kCalibration: return "calibration error";
    case ErrorCode::kInvalidRate: return "invalid rate";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kInsufficientFrames: return "insufficient frames";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kIo: return "I/O error";
    case ErrorCode::kUsage: return "usage error";
  }
  return "error";
}

}  // namespace bevstream
