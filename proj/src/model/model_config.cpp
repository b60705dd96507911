// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/model_config.hpp"

#include <numbers>

#include "ndal/error.hpp"

namespace ndal {

std::string_view to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kNdal: return "ndal";
    case TrainMode::kJoint: return "joint";
    case TrainMode::kWoAl: return "wo-al";
    case TrainMode::kWoDis: return "wo-dis";
  }
  return "unknown";
}

TrainMode parse_train_mode(std::string_view text) {
  if (text == "ndal") return TrainMode::kNdal;
  if (text == "joint") return TrainMode::kJoint;
  if (text == "wo-al") return TrainMode::kWoAl;
  if (text == "wo-dis") return TrainMode::kWoDis;
  fail(ErrorCode::kConfigError,
       "unknown mode '" + std::string(text) + "' (expected ndal|joint|wo-al|wo-dis)");
}

bool has_disentanglement(TrainMode mode) {
  return mode == TrainMode::kNdal || mode == TrainMode::kWoAl;
}

bool has_domain_classifier(TrainMode mode) {
  return mode == TrainMode::kNdal || mode == TrainMode::kWoDis;
}

void BackboneConfig::validate() const {
  if (feature_dim == 0 || embedding_dim == 0 || attention_hidden == 0) {
    fail(ErrorCode::kConfigError, "backbone dims must be > 0");
  }
  if (channels.empty() || channels.size() != kernels.size() ||
      channels.size() != dilations.size()) {
    fail(ErrorCode::kConfigError, "backbone channels/kernels/dilations must be non-empty "
                                  "and of equal length");
  }
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (channels[i] == 0 || dilations[i] == 0 || kernels[i] % 2 == 0) {
      fail(ErrorCode::kConfigError,
           "backbone layer " + std::to_string(i) +
               ": channels and dilation must be > 0 and the kernel odd");
    }
  }
}

void DisentangleConfig::validate() const {
  if (depth != 2) fail(ErrorCode::kConfigError, "encoder depth must be 2");
  if (hidden == 0 || irrelevant_dim == 0) {
    fail(ErrorCode::kConfigError, "encoder widths must be > 0");
  }
}

void AamHeadConfig::validate() const {
  if (num_speakers < 2) fail(ErrorCode::kConfigError, "AAM head needs >= 2 speakers");
  if (!(scale > 0.0)) fail(ErrorCode::kConfigError, "AAM scale must be > 0");
  if (!(margin >= 0.0 && margin < std::numbers::pi / 2)) {
    fail(ErrorCode::kConfigError, "AAM margin must lie in [0, pi/2)");
  }
}

void DomainClassifierConfig::validate() const {
  if (hidden == 0) fail(ErrorCode::kConfigError, "domain classifier hidden must be > 0");
  if (!(grl_lambda > 0.0)) fail(ErrorCode::kConfigError, "grl_lambda must be > 0");
  if (!(ramp_fraction >= 0.0 && ramp_fraction <= 1.0)) {
    fail(ErrorCode::kConfigError, "grl ramp fraction must lie in [0, 1]");
  }
}

void ModelConfig::validate() const {
  backbone.validate();
  disentangle.validate();
  aam.validate();
  domain.validate();
}

}  // namespace ndal
