#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace idas {

enum class ErrorCode {
  InvalidArgument,
  Io,
  NonUtf8,
  DimensionMismatch,
  RemoteUnavailable,
  CorruptIndex,
  VersionUnsupported,
  MissingSlot,
  UnknownSlot,
  UnknownTemplate,
  BackendUnavailable,
  NoRuleMatched,
  ResponseEmpty,
  UnparseableResponse,
  InsufficientCategory,
  NoPairsSurvived,
  UnknownSystemName,
  InvalidConfig,
  NoDocuments,
};

std::string_view to_string(ErrorCode code) noexcept;

/// The single exception type thrown by the library. The code is stable and
/// maps onto service error bodies; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace idas
