#include "tunevault/error.hpp"

namespace tunevault {

std::string_view wire_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateName: return "DUPLICATE_NAME";
    case ErrorCode::MalformedName: return "MALFORMED_NAME";
    case ErrorCode::BadPattern: return "BAD_PATTERN";
    case ErrorCode::UnknownChannel: return "UNKNOWN_CHANNEL";
    case ErrorCode::TypeMismatch: return "TYPE_MISMATCH";
    case ErrorCode::SubscriberOverflow: return "SUBSCRIBER_OVERFLOW";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::DuplicateAddress: return "DUPLICATE_ADDRESS";
    case ErrorCode::LimitOrderError: return "LIMIT_ORDER_ERROR";
    case ErrorCode::CatalogInvariant: return "CATALOG_INVARIANT";
    case ErrorCode::UnknownDevice: return "UNKNOWN_DEVICE";
    case ErrorCode::UnknownPreset: return "UNKNOWN_PRESET";
    case ErrorCode::UnknownTable: return "UNKNOWN_TABLE";
    case ErrorCode::SchemaMismatch: return "SCHEMA_MISMATCH";
    case ErrorCode::StorageFailure: return "STORAGE_FAILURE";
    case ErrorCode::UnknownTune: return "UNKNOWN_TUNE";
    case ErrorCode::UnknownSnapshot: return "UNKNOWN_SNAPSHOT";
    case ErrorCode::WriteFailure: return "WRITE_FAILURE";
    case ErrorCode::RestoreBusy: return "RESTORE_BUSY";
    case ErrorCode::InvalidBeam: return "INVALID_BEAM";
    case ErrorCode::UnknownColumn: return "UNKNOWN_COLUMN";
    case ErrorCode::BadOperator: return "BAD_OPERATOR";
    case ErrorCode::BadRequest: return "BAD_REQUEST";
    case ErrorCode::LimitViolation: return "LIMIT_VIOLATION";
    case ErrorCode::NotFound: return "NOT_FOUND";
    case ErrorCode::ConnectFailed: return "CONNECT_FAILED";
  }
  return "INTERNAL";
}

const std::vector<ErrorCode>& all_error_codes() {
  static const std::vector<ErrorCode> codes = [] {
    std::vector<ErrorCode> out;
    for (int i = 0; i <= static_cast<int>(ErrorCode::ConnectFailed); ++i)
      out.push_back(static_cast<ErrorCode>(i));
    return out;
  }();
  return codes;
}

}  // namespace tunevault
