#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sensorsched {

enum class ErrorKind {
  RankDeficient,
  DomainError,
  Infeasible,
  MaxIterExceeded,
  MaxOuterIterExceeded,
  TooLarge,
  Validation,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; callers switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RankDeficient:
      return "RankDeficient";
    case ErrorKind::DomainError:
      return "DomainError";
    case ErrorKind::Infeasible:
      return "Infeasible";
    case ErrorKind::MaxIterExceeded:
      return "MaxIterExceeded";
    case ErrorKind::MaxOuterIterExceeded:
      return "MaxOuterIterExceeded";
    case ErrorKind::TooLarge:
      return "TooLarge";
    case ErrorKind::Validation:
      return "Validation";
  }
  return "Unknown";
}

}  // namespace sensorsched
