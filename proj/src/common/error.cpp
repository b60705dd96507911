// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/error.hpp"

namespace ndal {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kNotScalar: return "NotScalar";
    case ErrorCode::kNonPositiveLambda: return "NonPositiveLambda";
    case ErrorCode::kMissingGrad: return "MissingGrad";
    case ErrorCode::kStaleState: return "StaleState";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kUnsupportedRate: return "UnsupportedRate";
    case ErrorCode::kCorruptFile: return "CorruptFile";
    case ErrorCode::kSilentNoise: return "SilentNoise";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kDegenerateTime: return "DegenerateTime";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kInsufficientSpeakers: return "InsufficientSpeakers";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kDegenerateSet: return "DegenerateSet";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kSplitViolation: return "SplitViolation";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what),
      code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace ndal
