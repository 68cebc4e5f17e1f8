#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rtspec {

enum class ErrorCode {
  Syntax,
  Validation,
  PinType,
  UnknownPoint,
  UnknownFunction,
  NotScalar,
  SubstitutionRefused,
  GuardOnLocal,
  SpecializationTooLarge,
  NotPure,
  EmptyHotMap,
  EmptyCandidates,
  AlreadyExploring,
  InvalidPrefix,
  InvalidArgument,
  Config,
  Io,
  Trap,
};

std::string_view to_string(ErrorCode code);

/// Base class for every error raised by the library. The code is what the
/// C API maps onto its status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class SyntaxError : public Error {
 public:
  SyntaxError(int line, const std::string& message)
      : Error(ErrorCode::Syntax,
              "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string function, const std::string& message)
      : Error(ErrorCode::Validation,
              (function.empty() ? std::string() : function + ": ") + message),
        function_(std::move(function)) {}

  const std::string& function() const noexcept { return function_; }

 private:
  std::string function_;
};

}  // namespace rtspec
