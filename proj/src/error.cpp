#include "olt/error.hpp"

namespace olt {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingCoverage: return "MissingCoverage";
    case ErrorCode::kMalformedRow: return "MalformedRow";
    case ErrorCode::kDuplicateName: return "DuplicateName";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kBadMaterialId: return "BadMaterialId";
    case ErrorCode::kNonFiniteResult: return "NonFiniteResult";
    case ErrorCode::kInvalidStructure: return "InvalidStructure";
    case ErrorCode::kTooManyLayers: return "TooManyLayers";
    case ErrorCode::kMaterialOutOfVocab: return "MaterialOutOfVocab";
    case ErrorCode::kMalformedSequence: return "MalformedSequence";
    case ErrorCode::kBadId: return "BadId";
    case ErrorCode::kSeqTooLong: return "SeqTooLong";
    case ErrorCode::kBadTokenId: return "BadTokenId";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kManifestMismatch: return "ManifestMismatch";
    case ErrorCode::kCorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kBadIndex: return "BadIndex";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace olt
