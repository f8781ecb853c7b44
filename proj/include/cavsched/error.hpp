#pragma once

#include <stdexcept>
#include <string>

namespace cavsched {

enum class ErrorCode {
  config,
  domain,
  degenerate_horizon,
  invalid_plan,
  ordering,
  model,
  format,
  version,
  io,
  internal,
};

// All library failures are reported as cavsched::Error; the code is what the
// C API maps onto its status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace cavsched
