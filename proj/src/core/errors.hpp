#pragma once

#include <stdexcept>
#include <string>

namespace gemix {

/// Failure categories shared by the core library and the C API status codes.
enum class ErrorCode {
  invalid_argument = 1,
  config = 2,
  io = 3,
  format = 4,
  missing_artifact = 5,
  runtime = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorCode::invalid_argument, message);
}

}  // namespace gemix
