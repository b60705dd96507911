// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

namespace ndal {

struct ScoreSet {
  std::vector<double> scores;
  std::vector<bool> targets;

  void add(double score, bool target) {
    scores.push_back(score);
    targets.push_back(target);
  }
  std::size_t size() const { return scores.size(); }
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

/// Equal error rate by a threshold sweep.
///
/// Candidate thresholds are the sorted unique scores followed by +inf. At
/// threshold t, FAR(t) = #{non-target >= t} / #non-target and
/// FRR(t) = #{target < t} / #target. With k the first candidate where
/// FRR >= FAR, the EER is linearly interpolated between candidates k-1 and k
/// on the difference FRR - FAR; the threshold is interpolated the same way
/// (t_{k-1} when t_k is +inf). Throws DegenerateSet when either class is
/// empty and InvalidArgument on non-finite scores.
EerResult compute_eer(const ScoreSet& set);

/// <a,b> / (|a| |b|). Throws ZeroVector and ShapeMismatch.
double cosine_score(std::span<const float> a, std::span<const float> b);

}  // namespace ndal
