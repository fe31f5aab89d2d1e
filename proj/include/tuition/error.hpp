#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tuition {

enum class ErrorCode {
  Overflow,
  InvalidArgument,
  MissingTariff,
  ForeignRegistration,
  WrongSemester,
  EmptyInput,
  // wire codec
  InvalidField,
  MalformedLine,
  UnknownKind,
  InvalidEnum,
  NonNumericAmount,
  // engine
  EngineNotReady,
  InvalidTransition,
  MissingAcademicData,
  ValidationError,
  // store
  DuplicateTransaction,
  BillNotFound,
  BillAlreadyPaid,
  CorruptSnapshot,
  CorruptLog,
  IoError,
  // simulator
  ConfigError,
  NoBillAvailable,
  ChannelTimeout,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Batch validation failure; one diagnostic per offending record.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> diagnostics);

  const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

}  // namespace tuition
