#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace olt {

enum class ErrorCode {
  kMissingCoverage,
  kMalformedRow,
  kDuplicateName,
  kOutOfRange,
  kBadMaterialId,
  kNonFiniteResult,
  kInvalidStructure,
  kTooManyLayers,
  kMaterialOutOfVocab,
  kMalformedSequence,
  kBadId,
  kSeqTooLong,
  kBadTokenId,
  kShapeMismatch,
  kManifestMismatch,
  kCorruptCheckpoint,
  kNonFiniteLoss,
  kConfigError,
  kBadIndex,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (and the CLI) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

}  // namespace olt
