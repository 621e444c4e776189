#include "affdim/error.hpp"

namespace affdim {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptySubshift: return "EmptySubshift";
    case ErrorCode::BadSubshift: return "BadSubshift";
    case ErrorCode::LetterOutOfRange: return "LetterOutOfRange";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::NegativeT: return "NegativeT";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DepthBudgetExceeded: return "DepthBudgetExceeded";
    case ErrorCode::NonContractive: return "NonContractive";
    case ErrorCode::NotDiagonal: return "NotDiagonal";
    case ErrorCode::TOutOfRange: return "TOutOfRange";
    case ErrorCode::IntegerCrossing: return "IntegerCrossing";
    case ErrorCode::DepthExceeded: return "DepthExceeded";
    case ErrorCode::WindowOverrun: return "WindowOverrun";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::ScaleTooFine: return "ScaleTooFine";
    case ErrorCode::Malformed: return "Malformed";
    case ErrorCode::UnknownSubcommand: return "UnknownSubcommand";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::CountOverflow: return "CountOverflow";
    case ErrorCode::NumericFailure: return "NumericFailure";
  }
  return "Unknown";
}

}  // namespace affdim
