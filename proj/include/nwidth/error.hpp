#pragma once

#include <stdexcept>
#include <string>

namespace nwidth {

enum class ErrorKind {
  invalid_argument,
  structural,
  nonfinite,
  singular,
  hypothesis,
  level_collapse,
  no_convergence,
  unsupported,
  insufficient_data,
  parse,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::structural: return "structural";
    case ErrorKind::nonfinite: return "nonfinite";
    case ErrorKind::singular: return "singular";
    case ErrorKind::hypothesis: return "hypothesis";
    case ErrorKind::level_collapse: return "level-collapse";
    case ErrorKind::no_convergence: return "no-convergence";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::parse: return "parse";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace nwidth
