#pragma once

#include <stdexcept>
#include <string>

namespace kolmo {

/// Failure categories shared by every module. The CLI maps them to exit codes.
enum class ErrorKind {
  domain,       ///< argument outside an operation's precondition
  singularity,  ///< evaluation at the singular point of a drift
  not_radial,
  margin,       ///< grid too small to absorb the heat kernel
  stability,    ///< time step violates the scheme's monotonicity rule
  convergence,
  degenerate,
  unbounded_drift,
  boundary_flux,
  validation,   ///< malformed configuration or input
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) raise(kind, what);
}

}  // namespace kolmo
