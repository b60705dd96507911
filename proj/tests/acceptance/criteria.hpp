// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

namespace ndal::acceptance {

struct Verdict {
  bool pass = false;
  std::string detail;
};

// Built with the 64-bit scalar type.
Verdict gradient_correctness();
Verdict reversal_contract();

}  // namespace ndal::acceptance
