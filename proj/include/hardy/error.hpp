#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hardy {

enum class ErrorKind {
  MuOutOfRange,
  NonpositiveRadius,
  DegenerateMu,
  RhoBelowOne,
  SeriesNotApplicable,
  RminTooLarge,
  StepFailure,
  Overflow,
  RegularBranchVanishes,
  NonconvergedODE,
  ScheduleTooShort,
  TailDivergence,
  OriginDivergence,
  NonpositiveValues,
  WindowTooSmall,
  MuPrimeOutOfRange,
  NoAdmissibleMuPrime,
  CertificateFailed,
  RadiusOutOfRange,
  PreconditionViolated,
  EpsilonOutOfRange,
  BracketInvalid,
  SupportExceedsGrid,
  NegativeU,
  ConfigInvalid,
  IoError,
};

std::string_view to_string(ErrorKind kind);

// All failures raised by the library carry a kind so callers (and the CLI
// exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace hardy
