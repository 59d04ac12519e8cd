#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fieldpred {

/// Machine-readable failure category. The CLI maps each one to an exit code.
enum class ErrorCategory {
  domain,
  parse,
  config,
  io,
  missing_group,
  invalid_truncation,
  exhausted_risk,
  inconsistency,
  initialization,
  convergence,
  calibration,
  unsupported,
  diagnostic_unavailable,
  hazard_overflow,
};

inline std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::domain: return "domain";
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::config: return "config";
    case ErrorCategory::io: return "io";
    case ErrorCategory::missing_group: return "missing-group";
    case ErrorCategory::invalid_truncation: return "invalid-truncation";
    case ErrorCategory::exhausted_risk: return "exhausted-risk";
    case ErrorCategory::inconsistency: return "inconsistency";
    case ErrorCategory::initialization: return "initialization";
    case ErrorCategory::convergence: return "convergence";
    case ErrorCategory::calibration: return "calibration";
    case ErrorCategory::unsupported: return "unsupported";
    case ErrorCategory::diagnostic_unavailable: return "diagnostic-unavailable";
    case ErrorCategory::hazard_overflow: return "hazard-overflow";
  }
  return "unknown";
}

inline int exit_code(ErrorCategory c) { return 10 + static_cast<int>(c); }

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& message) {
  throw Error(c, message);
}

}  // namespace fieldpred
