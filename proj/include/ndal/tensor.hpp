// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ndal/precision.hpp"

NDAL_CORE_NAMESPACE_BEGIN

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Storage aligned for Eigen's packet loads. Vectorized reductions peel a
/// prefix up to the first aligned element, so without a fixed alignment the
/// rounding of a sum would depend on where the allocator placed the buffer.
using Storage = std::vector<Real, Eigen::aligned_allocator<Real>>;

/// Dense row-major array. Gradient bookkeeping lives on the tape and on
/// Parameter, so a Tensor is a plain value type.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real(0));
  Tensor(Shape shape, std::vector<Real> data);
  Tensor(Shape shape, Storage data);
  Tensor(Shape shape, std::initializer_list<Real> data) : Tensor(std::move(shape), Storage(data)) {}

  static Tensor scalar(Real value) { return Tensor({}, {value}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }
  Real* ptr() { return data_.data(); }
  const Real* ptr() const { return data_.data(); }
  Storage& storage() { return data_; }

  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }

  /// Value of a single-element tensor.
  Real item() const;
  bool all_finite() const;
  void fill(Real value);
  /// Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  Storage data_;
};

NDAL_CORE_NAMESPACE_END
