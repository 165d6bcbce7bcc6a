#include "idas/error.hpp"

namespace idas {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::Io: return "IO_ERROR";
    case ErrorCode::NonUtf8: return "NON_UTF8";
    case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::RemoteUnavailable: return "REMOTE_UNAVAILABLE";
    case ErrorCode::CorruptIndex: return "CORRUPT_INDEX";
    case ErrorCode::VersionUnsupported: return "VERSION_UNSUPPORTED";
    case ErrorCode::MissingSlot: return "MISSING_SLOT";
    case ErrorCode::UnknownSlot: return "UNKNOWN_SLOT";
    case ErrorCode::UnknownTemplate: return "UNKNOWN_TEMPLATE";
    case ErrorCode::BackendUnavailable: return "BACKEND_UNAVAILABLE";
    case ErrorCode::NoRuleMatched: return "NO_RULE_MATCHED";
    case ErrorCode::ResponseEmpty: return "RESPONSE_EMPTY";
    case ErrorCode::UnparseableResponse: return "UNPARSEABLE_RESPONSE";
    case ErrorCode::InsufficientCategory: return "INSUFFICIENT_CATEGORY";
    case ErrorCode::NoPairsSurvived: return "NO_PAIRS_SURVIVED";
    case ErrorCode::UnknownSystemName: return "UNKNOWN_SYSTEM_NAME";
    case ErrorCode::InvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::NoDocuments: return "NO_DOCUMENTS";
  }
  return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace idas
