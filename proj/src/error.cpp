#include "vo/error.hpp"

namespace vo {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidId: return "InvalidId";
    case ErrorCode::InvalidLiteral: return "InvalidLiteral";
    case ErrorCode::CycleError: return "CycleError";
    case ErrorCode::UnknownConcept: return "UnknownConcept";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::UnmappedTerm: return "UnmappedTerm";
    case ErrorCode::ServiceMismatch: return "ServiceMismatch";
    case ErrorCode::DialectMismatch: return "DialectMismatch";
    case ErrorCode::InvalidRule: return "InvalidRule";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::ProviderFault: return "ProviderFault";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::DuplicateIndex: return "DuplicateIndex";
    case ErrorCode::InvalidRecord: return "InvalidRecord";
    case ErrorCode::UnknownMetric: return "UnknownMetric";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::UnknownComposite: return "UnknownComposite";
    case ErrorCode::IncompleteChildren: return "IncompleteChildren";
    case ErrorCode::BranchFailed: return "BranchFailed";
    case ErrorCode::ScriptError: return "ScriptError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptArchive: return "CorruptArchive";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      detail_(message) {}

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + message),
      line_(line) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace vo
