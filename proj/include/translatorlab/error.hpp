#ifndef TRANSLATORLAB_ERROR_HPP
#define TRANSLATORLAB_ERROR_HPP

#include <stdexcept>
#include <string>

namespace tlab {

// Coarse failure classes; the C API and the CLI map these onto
// status/exit codes (invalid -> 2, violation -> 1, blow_up -> 3).
enum class ErrorCode {
  invalid_argument,
  unsupported,
  insufficient_samples,
  solver_failure,
  verification_failure,
  monitor_violation,
  blow_up,
  io_failure,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace tlab

#endif
