// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Scalar width of the autodiff/model core. The default build computes in
// 32-bit; defining NDAL_REAL_DOUBLE produces the 64-bit gradient-check build.
// Each width lives in its own inline namespace so both variants can be linked
// into a single binary without symbol clashes.

#ifdef NDAL_REAL_DOUBLE
#define NDAL_CORE_NAMESPACE_BEGIN \
  namespace ndal {                \
  inline namespace f64 {
#else
#define NDAL_CORE_NAMESPACE_BEGIN \
  namespace ndal {                \
  inline namespace f32 {
#endif
#define NDAL_CORE_NAMESPACE_END \
  }                             \
  }

NDAL_CORE_NAMESPACE_BEGIN

#ifdef NDAL_REAL_DOUBLE
using Real = double;
#else
using Real = float;
#endif

NDAL_CORE_NAMESPACE_END
