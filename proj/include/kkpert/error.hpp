#pragma once

#include <stdexcept>
#include <string>

namespace kkpert {

enum class ErrorKind {
  DimensionMismatch,
  DependentBasis,
  NotUnital,
  NotClosedUnderMultiplication,
  NotSelfadjoint,
  NotMember,
  Singular,
  NoBlockStructure,
  PreconditionFailed,
  MaxIterExceeded,
  SourceMismatch,
  NotADerivation,
  OutOfRange,
  BadBlockSizes,
  ConfigInvalid,
  ParseError,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DependentBasis: return "DependentBasis";
    case ErrorKind::NotUnital: return "NotUnital";
    case ErrorKind::NotClosedUnderMultiplication: return "NotClosedUnderMultiplication";
    case ErrorKind::NotSelfadjoint: return "NotSelfadjoint";
    case ErrorKind::NotMember: return "NotMember";
    case ErrorKind::Singular: return "Singular";
    case ErrorKind::NoBlockStructure: return "NoBlockStructure";
    case ErrorKind::PreconditionFailed: return "PreconditionFailed";
    case ErrorKind::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorKind::SourceMismatch: return "SourceMismatch";
    case ErrorKind::NotADerivation: return "NotADerivation";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::BadBlockSizes: return "BadBlockSizes";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace kkpert
