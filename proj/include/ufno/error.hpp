#pragma once

#include <stdexcept>
#include <string>

namespace ufno {

enum class ErrorCode {
  invalid_argument = 1,  // bad config, shape mismatch, out-of-range value
  io = 2,                // filesystem failure
  format = 3,            // malformed file contents
  numeric = 4,           // NaN, divergence, non-convergence
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

} // namespace ufno
