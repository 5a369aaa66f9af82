#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bevstream {

enum class ErrorCode {
  kShape,
  kInvalidGeometry,
  kUnsupportedKernel,
  kInsufficientHistory,
  kStreamOrder,
  kEmptyStream,
  kInvalidInterval,
  kCalibration,
  kInvalidRate,
  kConfig,
  kInsufficientFrames,
  kFormat,
  kIo,
  kUsage,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the category rather than the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bevstream
