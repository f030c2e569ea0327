#pragma once

#include <stdexcept>
#include <string>

namespace qcs {

enum class ErrorKind {
  InvalidParameter,
  InfeasibleWindow,
  Unsupported,
  StateSpaceTooLarge,
  SamplerOverrun,
  Overloaded,
  NonConvergence,
  InvalidConfig,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid_parameter";
    case ErrorKind::InfeasibleWindow: return "infeasible_window";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::StateSpaceTooLarge: return "state_space_too_large";
    case ErrorKind::SamplerOverrun: return "sampler_overrun";
    case ErrorKind::Overloaded: return "overloaded";
    case ErrorKind::NonConvergence: return "non_convergence";
    case ErrorKind::InvalidConfig: return "invalid_config";
  }
  return "unknown";
}

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace qcs
