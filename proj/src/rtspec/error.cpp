#include "rtspec/error.hpp"

namespace rtspec {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Syntax: return "syntax";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::PinType: return "pin_type";
    case ErrorCode::UnknownPoint: return "unknown_point";
    case ErrorCode::UnknownFunction: return "unknown_function";
    case ErrorCode::NotScalar: return "not_scalar";
    case ErrorCode::SubstitutionRefused: return "substitution_refused";
    case ErrorCode::GuardOnLocal: return "guard_on_local";
    case ErrorCode::SpecializationTooLarge: return "specialization_too_large";
    case ErrorCode::NotPure: return "not_pure";
    case ErrorCode::EmptyHotMap: return "empty_hot_map";
    case ErrorCode::EmptyCandidates: return "empty_candidates";
    case ErrorCode::AlreadyExploring: return "already_exploring";
    case ErrorCode::InvalidPrefix: return "invalid_prefix";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
    case ErrorCode::Trap: return "trap";
  }
  return "unknown";
}

}  // namespace rtspec
