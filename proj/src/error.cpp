#include "hardy/error.hpp"

namespace hardy {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MuOutOfRange: return "MuOutOfRange";
    case ErrorKind::NonpositiveRadius: return "NonpositiveRadius";
    case ErrorKind::DegenerateMu: return "DegenerateMu";
    case ErrorKind::RhoBelowOne: return "RhoBelowOne";
    case ErrorKind::SeriesNotApplicable: return "SeriesNotApplicable";
    case ErrorKind::RminTooLarge: return "RminTooLarge";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::RegularBranchVanishes: return "RegularBranchVanishes";
    case ErrorKind::NonconvergedODE: return "NonconvergedODE";
    case ErrorKind::ScheduleTooShort: return "ScheduleTooShort";
    case ErrorKind::TailDivergence: return "TailDivergence";
    case ErrorKind::OriginDivergence: return "OriginDivergence";
    case ErrorKind::NonpositiveValues: return "NonpositiveValues";
    case ErrorKind::WindowTooSmall: return "WindowTooSmall";
    case ErrorKind::MuPrimeOutOfRange: return "MuPrimeOutOfRange";
    case ErrorKind::NoAdmissibleMuPrime: return "NoAdmissibleMuPrime";
    case ErrorKind::CertificateFailed: return "CertificateFailed";
    case ErrorKind::RadiusOutOfRange: return "RadiusOutOfRange";
    case ErrorKind::PreconditionViolated: return "PreconditionViolated";
    case ErrorKind::EpsilonOutOfRange: return "EpsilonOutOfRange";
    case ErrorKind::BracketInvalid: return "BracketInvalid";
    case ErrorKind::SupportExceedsGrid: return "SupportExceedsGrid";
    case ErrorKind::NegativeU: return "NegativeU";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace hardy
