#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cfmix {

enum class ErrorKind {
  InvalidElement,
  InvalidSubgroup,
  InvalidParameter,
  SizeLimit,
  ConstructionFailure,
  Consistency,
  InvalidLabel,
  InvalidPair,
  InvalidSchedule,
  InvalidAlgebra,
  Mismatch,
  TypeMismatch,
  OutOfRange,
  InvalidConfig,
  Io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidElement: return "invalid-element";
    case ErrorKind::InvalidSubgroup: return "invalid-subgroup";
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::SizeLimit: return "size-limit";
    case ErrorKind::ConstructionFailure: return "construction-failure";
    case ErrorKind::Consistency: return "consistency";
    case ErrorKind::InvalidLabel: return "invalid-label";
    case ErrorKind::InvalidPair: return "invalid-pair";
    case ErrorKind::InvalidSchedule: return "invalid-schedule";
    case ErrorKind::InvalidAlgebra: return "invalid-algebra";
    case ErrorKind::Mismatch: return "mismatch";
    case ErrorKind::TypeMismatch: return "type-mismatch";
    case ErrorKind::OutOfRange: return "out-of-range";
    case ErrorKind::InvalidConfig: return "invalid-config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace cfmix
