// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ndal {

enum class ErrorCode {
  kShapeMismatch,
  kNonFinite,
  kNotScalar,
  kNonPositiveLambda,
  kMissingGrad,
  kStaleState,
  kUnsupportedFormat,
  kUnsupportedRate,
  kCorruptFile,
  kSilentNoise,
  kTooShort,
  kDegenerateTime,
  kLabelOutOfRange,
  kInsufficientSpeakers,
  kNonFiniteLoss,
  kIoError,
  kVersionMismatch,
  kDegenerateSet,
  kZeroVector,
  kSplitViolation,
  kConfigError,
  kInvalidArgument,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace ndal
