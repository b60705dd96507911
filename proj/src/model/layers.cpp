// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/layers.hpp"

#include <cmath>

#include "ndal/error.hpp"

NDAL_CORE_NAMESPACE_BEGIN

Tensor kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (Real& v : t.data()) v = static_cast<Real>(rng.uniform(-bound, bound));
  return t;
}

Linear::Linear(ParameterStore& store, const std::string& name, std::size_t in,
               std::size_t out, Rng& rng)
    : weight(&store.add(name + ".weight", kaiming_uniform({out, in}, in, rng))),
      bias(&store.add(name + ".bias", Tensor({out}))) {}

Var Linear::operator()(Tape& tape, const Var& x) const {
  const Var b = tape.watch(*bias);
  return linear(x, tape.watch(*weight), &b);
}

Conv1d::Conv1d(ParameterStore& store, const std::string& name, std::size_t in,
               std::size_t out, std::size_t kernel, std::size_t dil, Rng& rng)
    : weight(&store.add(name + ".weight",
                        kaiming_uniform({out, in, kernel}, in * kernel, rng))),
      bias(&store.add(name + ".bias", Tensor({out}))),
      dilation(dil),
      padding(dil * (kernel - 1) / 2) {}

Var Conv1d::operator()(Tape& tape, const Var& x) const {
  const Var b = tape.watch(*bias);
  return conv1d(x, tape.watch(*weight), &b, dilation, padding);
}

BatchNorm1d::BatchNorm1d(ParameterStore& store, const std::string& name,
                         std::size_t channels)
    : gamma(&store.add(name + ".gamma", Tensor({channels}, Real(1)))),
      beta(&store.add(name + ".beta", Tensor({channels}))),
      running_mean(&store.add(name + ".running_mean", Tensor({channels}), false)),
      running_var(&store.add(name + ".running_var", Tensor({channels}, Real(1)), false)) {}

Var BatchNorm1d::operator()(Tape& tape, const Var& x, bool training) const {
  BatchNormState state;
  state.running_mean = &running_mean->value;
  state.running_var = &running_var->value;
  state.training = training;
  return batchnorm1d(x, tape.watch(*gamma), tape.watch(*beta), state);
}

Mlp::Mlp(ParameterStore& store, const std::string& name, std::size_t in,
         std::size_t hidden, std::size_t out, Rng& rng)
    : fc0(store, name + ".fc0", in, hidden, rng), fc1(store, name + ".fc1", hidden, out, rng) {}

Var Mlp::operator()(Tape& tape, const Var& x) const {
  return fc1(tape, relu(fc0(tape, x)));
}

AttentiveStatsPool::AttentiveStatsPool(ParameterStore& store, const std::string& name,
                                       std::size_t channels, std::size_t hidden, Rng& rng)
    : score0(store, name + ".score0", channels, hidden, 1, 1, rng),
      score1(store, name + ".score1", hidden, channels, 1, 1, rng) {}

Var AttentiveStatsPool::attention(Tape& tape, const Var& h) const {
  if (h.value().rank() != 3) {
    fail(ErrorCode::kShapeMismatch, "attentive pooling expects [n,c,t], got " +
                                        shape_str(h.shape()));
  }
  if (h.shape()[2] < 2) {
    fail(ErrorCode::kDegenerateTime, "attentive pooling needs at least 2 frames");
  }
  return softmax(score1(tape, tanh(score0(tape, h))));
}

Var AttentiveStatsPool::operator()(Tape& tape, const Var& h) const {
  const Var weights = attention(tape, h);
  const Var mu = sum_last(mul(weights, h));
  const Var second = sum_last(mul(weights, square(h)));
  const Var sigma = sqrt(clamp_min(sub(second, square(mu)), kVarianceFloor));
  return concat({mu, sigma}, 1);
}

NDAL_CORE_NAMESPACE_END
