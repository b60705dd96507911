// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/parameter.hpp"

#include "ndal/error.hpp"

NDAL_CORE_NAMESPACE_BEGIN

Parameter& ParameterStore::add(std::string name, Tensor value, bool trainable) {
  if (find(name) != nullptr) {
    fail(ErrorCode::kInvalidArgument, "duplicate parameter " + name);
  }
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->grad = Tensor(value.shape());
  p->value = std::move(value);
  p->trainable = trainable;
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParameterStore::find(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParameterStore::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

Parameter& ParameterStore::at(const std::string& name) {
  Parameter* p = find(name);
  if (p == nullptr) fail(ErrorCode::kInvalidArgument, "no parameter " + name);
  return *p;
}

std::vector<Parameter*> ParameterStore::trainable() {
  std::vector<Parameter*> out;
  for (auto& p : params_) {
    if (p->trainable) out.push_back(p.get());
  }
  return out;
}

std::vector<Parameter*> ParameterStore::with_prefix(const std::string& prefix) {
  std::vector<Parameter*> out;
  for (auto& p : params_) {
    if (p->trainable && p->name.starts_with(prefix)) out.push_back(p.get());
  }
  return out;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) {
    if (p->grad.numel() != p->value.numel() || p->grad.shape() != p->value.shape()) {
      p->grad = Tensor(p->value.shape());
    }
    p->grad.fill(Real(0));
  }
}

std::size_t ParameterStore::trainable_numel() const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p->trainable) n += p->value.numel();
  }
  return n;
}

NDAL_CORE_NAMESPACE_END
