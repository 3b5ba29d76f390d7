#pragma once

#include <stdexcept>
#include <string>

namespace mlivr {

enum class ErrorCode {
  kParse,
  kValidation,
  kOutOfRange,
  kUnknownId,
  kUnreachable,
  kInfeasible,
  kNoPath,
  kInvalidStart,
  kBehindCamera,
  kRankDeficient,
  kNonPositiveDepth,
  kJam,
  kLastAnchor,
  kNoAnchor,
  kHashMismatch,
  kInvalidState,
  kIo,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; the code lets callers (and the C API)
// branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mlivr
