#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vo {

enum class ErrorCode {
  ParseError,
  InvalidId,
  InvalidLiteral,
  CycleError,
  UnknownConcept,
  KindMismatch,
  MissingField,
  UnmappedTerm,
  ServiceMismatch,
  DialectMismatch,
  InvalidRule,
  ProviderUnavailable,
  ProviderFault,
  DanglingReference,
  DuplicateIndex,
  InvalidRecord,
  UnknownMetric,
  EmptyWindow,
  UnknownComposite,
  IncompleteChildren,
  BranchFailed,
  ScriptError,
  VersionMismatch,
  CorruptArchive,
};

std::string_view to_string(ErrorCode code);

/// Domain error. Every failure the kernel reports carries one of the codes
/// above so callers can branch on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  /// Message without the "<Code>: " prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Parse failure at a 1-based line of some line-oriented input.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace vo
