// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ndal/tensor.hpp"

NDAL_CORE_NAMESPACE_BEGIN

/// A named model tensor. Trainable parameters carry a gradient; buffers
/// (batchnorm running statistics) do not.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;
};

/// Owns the parameters of a model in registration order. Addresses are stable
/// for the lifetime of the store.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  Parameter& add(std::string name, Tensor value, bool trainable = true);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  Parameter& at(const std::string& name);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  std::vector<Parameter*> trainable();
  /// Trainable parameters whose name starts with `prefix`.
  std::vector<Parameter*> with_prefix(const std::string& prefix);
  void zero_grad();
  std::size_t trainable_numel() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

NDAL_CORE_NAMESPACE_END
