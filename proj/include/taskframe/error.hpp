#pragma once

#include <stdexcept>
#include <string>

namespace taskframe {

enum class ErrorCode {
  kInvalidInput,  // malformed files, bad configuration, violated preconditions
  kNumerical,     // singular systems, non-convergence, divergence
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void ThrowInvalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidInput, what);
}

[[noreturn]] inline void ThrowNumerical(const std::string& what) {
  throw Error(ErrorCode::kNumerical, what);
}

}  // namespace taskframe
