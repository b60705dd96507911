// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ndal/rng.hpp"

NDAL_CORE_NAMESPACE_BEGIN

namespace {

std::vector<std::size_t> pick_indices(std::size_t numel, std::size_t limit,
                                      std::uint64_t seed) {
  std::vector<std::size_t> idx(numel);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (limit == 0 || limit >= numel) return idx;
  Rng rng(seed);
  for (std::size_t i = 0; i < limit; ++i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(numel - 1)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(limit);
  std::sort(idx.begin(), idx.end());
  return idx;
}

void add_entry(GradCheckReport& report, const GradCheckOptions& options,
               std::size_t input, std::size_t index, double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), options.abs_floor});
  GradCheckEntry e{input, index, analytic, numeric, std::abs(analytic - numeric) / denom};
  report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
  report.entries.push_back(e);
}

}  // namespace

std::vector<GradCheckEntry> GradCheckReport::failures() const {
  std::vector<GradCheckEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [this](const GradCheckEntry& e) { return e.rel_error > tol; });
  return out;
}

GradCheckReport grad_check(const TensorProgram& f, std::vector<Tensor> inputs,
                           const GradCheckOptions& options) {
  GradCheckReport report;
  report.tol = options.tol;

  std::vector<Tensor> analytic(inputs.size());
  {
    Tape tape;
    std::vector<Var> leaves;
    for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t));
    const Var out = f(tape, leaves);
    Gradients grads = tape.backward(out);
    for (std::size_t k = 0; k < leaves.size(); ++k) {
      analytic[k] = std::move(grads.at(leaves[k].id()));
    }
  }

  auto evaluate = [&]() {
    Tape tape;
    std::vector<Var> consts;
    for (const Tensor& t : inputs) consts.push_back(tape.constant(t));
    return static_cast<double>(f(tape, consts).value().item());
  };

  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i :
         pick_indices(inputs[k].numel(), options.max_elements_per_input,
                      derive_seed(options.seed, k))) {
      const Real original = inputs[k][i];
      inputs[k][i] = static_cast<Real>(original + options.eps);
      const double up = evaluate();
      inputs[k][i] = static_cast<Real>(original - options.eps);
      const double down = evaluate();
      inputs[k][i] = original;
      add_entry(report, options, k, i, analytic[k][i], (up - down) / (2.0 * options.eps));
    }
  }
  return report;
}

GradCheckReport grad_check(const ParamProgram& f, std::span<Parameter* const> params,
                           const GradCheckOptions& options) {
  GradCheckReport report;
  report.tol = options.tol;

  for (Parameter* p : params) p->grad = Tensor(p->value.shape());
  {
    Tape tape;
    tape.backward(f(tape));
  }
  std::vector<Tensor> analytic;
  for (Parameter* p : params) analytic.push_back(p->grad);

  auto evaluate = [&]() {
    Tape tape;
    return static_cast<double>(f(tape).value().item());
  };

  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& value = params[k]->value;
    for (std::size_t i : pick_indices(value.numel(), options.max_elements_per_input,
                                      derive_seed(options.seed, k))) {
      const Real original = value[i];
      value[i] = static_cast<Real>(original + options.eps);
      const double up = evaluate();
      value[i] = static_cast<Real>(original - options.eps);
      const double down = evaluate();
      value[i] = original;
      add_entry(report, options, k, i, analytic[k][i], (up - down) / (2.0 * options.eps));
    }
  }
  return report;
}

NDAL_CORE_NAMESPACE_END
