#pragma once

#include <stdexcept>
#include <string>

namespace synthdet {

enum class ErrorCode {
  kIoError,
  kFileNotFound,
  kParseError,
  kEmptyMesh,
  kInvalidParam,
  kBehindCamera,
  kZeroAreaImage,
  kLevelTooLarge,
  kInvalidRange,
  kNonUnitDirection,
  kBackgroundTooSmall,
  kNoValidPlacement,
  kGenerationFailed,
  kSchemaVersionMismatch,
  kUnknownCategory,
  kShapeMismatch,
  kNumericalOverflow,
  kConfigError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kFileNotFound: return "FileNotFound";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kEmptyMesh: return "EmptyMesh";
    case ErrorCode::kInvalidParam: return "InvalidParam";
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kZeroAreaImage: return "ZeroAreaImage";
    case ErrorCode::kLevelTooLarge: return "LevelTooLarge";
    case ErrorCode::kInvalidRange: return "InvalidRange";
    case ErrorCode::kNonUnitDirection: return "NonUnitDirection";
    case ErrorCode::kBackgroundTooSmall: return "BackgroundTooSmall";
    case ErrorCode::kNoValidPlacement: return "NoValidPlacement";
    case ErrorCode::kGenerationFailed: return "GenerationFailed";
    case ErrorCode::kSchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::kUnknownCategory: return "UnknownCategory";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNumericalOverflow: return "NumericalOverflow";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "UnknownError";
}

}  // namespace synthdet
