#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tunevault {

enum class ErrorCode {
  DuplicateName,
  MalformedName,
  BadPattern,
  UnknownChannel,
  TypeMismatch,
  SubscriberOverflow,
  ParseError,
  DuplicateAddress,
  LimitOrderError,
  CatalogInvariant,
  UnknownDevice,
  UnknownPreset,
  UnknownTable,
  SchemaMismatch,
  StorageFailure,
  UnknownTune,
  UnknownSnapshot,
  WriteFailure,
  RestoreBusy,
  InvalidBeam,
  UnknownColumn,
  BadOperator,
  BadRequest,
  LimitViolation,
  NotFound,
  ConnectFailed,
};

/// Stable machine-readable code used on the wire ("UNKNOWN_TABLE", ...).
std::string_view wire_code(ErrorCode code);

/// Every code, in declaration order.
const std::vector<ErrorCode>& all_error_codes();

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tunevault
