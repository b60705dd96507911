// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/eer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ndal/error.hpp"

namespace ndal {

EerResult compute_eer(const ScoreSet& set) {
  if (set.scores.size() != set.targets.size()) {
    fail(ErrorCode::kShapeMismatch, "compute_eer: scores and labels differ in length");
  }
  const std::size_t n = set.scores.size();
  const auto num_target = static_cast<std::size_t>(
      std::count(set.targets.begin(), set.targets.end(), true));
  const std::size_t num_nontarget = n - num_target;
  if (num_target == 0 || num_nontarget == 0) {
    fail(ErrorCode::kDegenerateSet, "compute_eer: need at least one target and one non-target");
  }
  for (double s : set.scores) {
    if (!std::isfinite(s)) fail(ErrorCode::kInvalidArgument, "compute_eer: non-finite score");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return set.scores[a] < set.scores[b]; });

  // Walk unique scores upward; below the current candidate lie `tgt_below`
  // targets and `non_below` non-targets.
  const double nt = static_cast<double>(num_target), nn = static_cast<double>(num_nontarget);
  double prev_far = 1.0, prev_frr = 0.0, prev_t = set.scores[order[0]];
  std::size_t tgt_below = 0, non_below = 0;
  std::size_t i = 0;
  bool first = true;
  while (true) {
    const bool at_end = i == n;
    const double t = at_end ? std::numeric_limits<double>::infinity() : set.scores[order[i]];
    const double far = static_cast<double>(num_nontarget - non_below) / nn;
    const double frr = static_cast<double>(tgt_below) / nt;
    if (!first && frr >= far) {
      const double d0 = prev_frr - prev_far, d1 = frr - far;
      const double alpha = -d0 / (d1 - d0);
      EerResult r;
      r.eer = prev_far + alpha * (far - prev_far);
      r.threshold = std::isinf(t) ? prev_t : prev_t + alpha * (t - prev_t);
      return r;
    }
    first = false;
    prev_far = far;
    prev_frr = frr;
    prev_t = t;
    while (i < n && set.scores[order[i]] == t) {
      (set.targets[order[i]] ? tgt_below : non_below) += 1;
      ++i;
    }
  }
}

double cosine_score(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) fail(ErrorCode::kShapeMismatch, "cosine_score: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) fail(ErrorCode::kZeroVector, "cosine_score: zero vector");
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

}  // namespace ndal
