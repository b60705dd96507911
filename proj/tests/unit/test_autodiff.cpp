// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdint>

#include "doctest.h"
#include "ndal/error.hpp"
#include "ndal/gradcheck.hpp"
#include "ndal/ops.hpp"
#include "ndal/optim.hpp"
#include "support/op_cases.hpp"

using namespace ndal;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected ndal::Error");
  return ErrorCode::kInvalidArgument;
}

std::vector<Real> values(const Var& v) {
  return {v.value().data().begin(), v.value().data().end()};
}

}  // namespace

TEST_CASE("forward examples") {
  Tape tape;
  const Var a = tape.constant(Tensor({2, 2}, {1, 2, 3, 4}));
  const Var eye = tape.constant(Tensor({2, 2}, {1, 0, 0, 1}));
  CHECK(values(matmul(a, eye)) == std::vector<Real>{1, 2, 3, 4});

  const Var r = relu(tape.constant(Tensor({3}, {-1, 0, 2})));
  CHECK(values(r) == std::vector<Real>{0, 0, 2});

  const Var z = tape.constant(Tensor({2}, {0, 0}));
  CHECK(values(softmax(z)) == std::vector<Real>{0.5, 0.5});
  const auto ls = values(log_softmax(z));
  CHECK(ls[0] == doctest::Approx(-std::log(2.0)));
  CHECK(ls[1] == doctest::Approx(-std::log(2.0)));
}

TEST_CASE("op errors") {
  Tape tape;
  const Var a = tape.leaf(Tensor({2, 3}));
  const Var b = tape.leaf(Tensor({2, 3}));
  CHECK(code_of([&] { matmul(a, b); }) == ErrorCode::kShapeMismatch);
  CHECK(code_of([&] { add(a, tape.leaf(Tensor({2}))); }) == ErrorCode::kShapeMismatch);
  const Var x = tape.leaf(Tensor({1, 2, 3}));
  const Var w = tape.leaf(Tensor({1, 2, 5}));
  CHECK(code_of([&] { conv1d(x, w, nullptr, 1, 0); }) == ErrorCode::kShapeMismatch);
  CHECK(code_of([&] { sqrt(tape.leaf(Tensor({1}, {-1}))); }) == ErrorCode::kNonFinite);
  const std::vector<std::int64_t> bad{0, 3};
  CHECK(code_of([&] { pick(a, bad); }) == ErrorCode::kLabelOutOfRange);
  CHECK(code_of([&] { grad_reverse(a, 0.0); }) == ErrorCode::kNonPositiveLambda);
  CHECK(code_of([&] { grad_reverse(a, -1.0); }) == ErrorCode::kNonPositiveLambda);
}

TEST_CASE("backward: analytic and disconnected cases") {
  Tape tape;
  const Var x = tape.leaf(Tensor({1}, {3}));
  const Var w = tape.leaf(Tensor({2}, {1, 1}));
  const Gradients g = tape.backward(mean(square(x)));
  CHECK(g.at(x.id())[0] == doctest::Approx(6.0));
  CHECK(g.at(w.id()) == Tensor({2}));
  CHECK(tape.size() == 0);

  Tape t2;
  const Var y = t2.leaf(Tensor({2}, {1, 2}));
  const Var c = t2.constant(Tensor({1}, {5}));
  const Gradients g2 = t2.backward(mean(c));
  CHECK(g2.at(y.id()) == Tensor({2}));
}

TEST_CASE("backward requires a scalar") {
  Tape tape;
  const Var x = tape.leaf(Tensor({2}, {1, 2}));
  CHECK(code_of([&] { tape.backward(square(x)); }) == ErrorCode::kNotScalar);
}

TEST_CASE("tape records only nodes that need gradients") {
  Tape tape;
  const Var c = tape.constant(Tensor({2}, {1, 2}));
  square(c);
  CHECK(tape.recorded() == 0);
  const Var x = tape.leaf(Tensor({2}, {1, 2}));
  mean(square(x));
  CHECK(tape.recorded() == 2);
}

TEST_CASE("watched parameter receives gradient and is reused") {
  Parameter p{"w", Tensor({2}, {1, -2}), Tensor({2}), true};
  Tape tape;
  const Var a = tape.watch(p);
  const Var b = tape.watch(p);
  CHECK(a.id() == b.id());
  tape.backward(mean(square(a)));
  CHECK(p.grad[0] == doctest::Approx(1.0));
  CHECK(p.grad[1] == doctest::Approx(-2.0));
}

TEST_CASE("grad_reverse contract") {
  Tape tape;
  const Tensor in({2}, {1.5, -2.0});
  const Var x = tape.leaf(in);
  const Var y = grad_reverse(x, 0.7);
  CHECK(y.value() == in);

  auto reversed_grad = [](Tensor upstream, double lambda) {
    Tape t;
    const Var leaf = t.leaf(Tensor({2}, {0.3, -0.8}));
    const Var out = grad_reverse(leaf, lambda);
    // d/dx sum(upstream * out) = upstream before reversal.
    const Var loss = mul_scalar(mean(mul(out, t.constant(upstream))), 2.0);
    return t.backward(loss).at(leaf.id());
  };
  const Tensor g1 = reversed_grad(Tensor({2}, {1, 1}), 1.0);
  CHECK(g1[0] == doctest::Approx(-1.0));
  CHECK(g1[1] == doctest::Approx(-1.0));

  // Oracle: finite differences of the same program without the reversal node.
  const Tensor upstream({2}, {2, -4});
  TensorProgram plain = [&](Tape& t, std::span<const Var> in) {
    return mul_scalar(mean(mul(in[0], t.constant(upstream))), 2.0);
  };
  GradCheckReport fd = grad_check(plain, {Tensor({2}, {0.3, -0.8})});
  const Tensor g2 = reversed_grad(upstream, 0.5);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(g2[i] == doctest::Approx(-0.5 * fd.entries[i].numeric).epsilon(1e-4));
  }
  CHECK(g2[0] == doctest::Approx(-1.0));
  CHECK(g2[1] == doctest::Approx(2.0));
}

TEST_CASE("adam: fixed point, first step, statefulness") {
  OptimizerOptions opt;
  opt.weight_decay = 0.0;
  {
    Parameter p{"w", Tensor({3}, {1, 2, 3}), Tensor({3}), true};
    Optimizer adam(opt);
    std::vector<Parameter*> ps{&p};
    adam.init(ps);
    adam.step(ps);
    CHECK(p.value == Tensor({3}, {1, 2, 3}));
  }
  {
    Parameter p{"w", Tensor({1}, {1}), Tensor({1}, {1}), true};
    Optimizer adam(opt);
    std::vector<Parameter*> ps{&p};
    adam.init(ps);
    adam.step(ps);
    // m_hat = 1, v_hat = 1: the step is lr / (1 + eps).
    CHECK(p.value[0] == doctest::Approx(1.0 - 0.001 / (1.0 + 1e-8)).epsilon(1e-7));
    CHECK(adam.step_count() == 1);
    const Real after_first = p.value[0];
    const Moments first = adam.moments().at("w");
    adam.step(ps);
    CHECK(adam.step_count() == 2);
    CHECK(p.value[0] != after_first);
    CHECK(adam.moments().at("w").first[0] != first.first[0]);
    CHECK(adam.moments().at("w").first[0] == doctest::Approx(0.19));
  }
}

TEST_CASE("adam applies decoupled weight decay") {
  OptimizerOptions opt;  // weight decay 2e-5
  Parameter p{"w", Tensor({1}, {2}), Tensor({1}), true};
  Optimizer adam(opt);
  std::vector<Parameter*> ps{&p};
  adam.init(ps);
  adam.step(ps);
  CHECK(p.value[0] == doctest::Approx(2.0 - 0.001 * 2e-5 * 2.0).epsilon(1e-7));
}

TEST_CASE("optimizer errors") {
  Parameter p{"w", Tensor({2}), Tensor(), true};
  std::vector<Parameter*> ps{&p};
  Optimizer adam;
  CHECK(code_of([&] { adam.step(ps); }) == ErrorCode::kMissingGrad);
  p.grad = Tensor({2});
  CHECK(code_of([&] { adam.step(ps); }) == ErrorCode::kStaleState);
  adam.init(ps);
  p.value = Tensor({3});
  p.grad = Tensor({3});
  CHECK(code_of([&] { adam.step(ps); }) == ErrorCode::kStaleState);
}

TEST_CASE("sgd option is plain descent") {
  OptimizerOptions opt;
  opt.kind = OptimizerKind::kSgd;
  opt.lr = 0.1;
  opt.weight_decay = 0.0;
  Parameter p{"w", Tensor({1}, {1}), Tensor({1}, {2}), true};
  std::vector<Parameter*> ps{&p};
  Optimizer sgd(opt);
  sgd.step(ps);
  CHECK(p.value[0] == doctest::Approx(0.8));
}

TEST_CASE("grad_check examples") {
  TensorProgram identity = [](Tape&, std::span<const Var> in) { return in[0]; };
  CHECK(grad_check(identity, {Tensor({1}, {0.7})}).max_rel_error == 0.0);

  Rng rng(11);
  TensorProgram rec = [](Tape&, std::span<const Var> in) {
    return mean(square(sub(in[0], in[1])));
  };
  const auto report = grad_check(rec, {test::randn({4, 8}, rng), test::randn({4, 8}, rng)});
  CHECK(report.entries.size() == 64);
  CHECK(report.max_rel_error < 1e-3);
}

TEST_CASE("softmax rows sum to one and log_softmax matches log(softmax)") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    const Var x = tape.constant(test::randn({test::dim(rng), test::dim(rng)}, rng, 4.0));
    const Tensor s = softmax(x).value();
    const Tensor ls = log_softmax(x).value();
    const std::size_t len = s.shape()[1];
    for (std::size_t r = 0; r < s.shape()[0]; ++r) {
      double total = 0.0;
      for (std::size_t j = 0; j < len; ++j) {
        total += s[r * len + j];
        CHECK(std::abs(std::log(s[r * len + j]) - ls[r * len + j]) < 1e-5);
      }
      CHECK(std::abs(total - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("every op kind matches finite differences (32-bit, 50 shapes each)") {
  const GradCheckOptions opt;
  Rng rng(2024);
  for (OpKind kind : all_op_kinds()) {
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      test::OpCase c = test::make_case(kind, rng);
      worst = std::max(worst, test::check_op(c, rng.next_u64(), opt).max_rel_error);
    }
    INFO(to_string(kind), " worst rel err ", worst);
    CHECK(worst < opt.tol);
  }
}

TEST_CASE("tape replay is deterministic") {
  auto run = [] {
    Rng rng(99);
    Tape tape;
    const Var x = tape.leaf(test::randn({4, 6}, rng));
    const Var w = tape.leaf(test::randn({5, 6}, rng));
    const Var loss = mean(square(tanh(linear(x, w))));
    const Real value = loss.value().item();
    Gradients g = tape.backward(loss);
    return std::make_pair(value, g.at(w.id()));
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("tensor storage is aligned for vectorized kernels") {
  for (std::size_t n : {1, 3, 17, 1000}) {
    const Tensor t({n});
    CHECK(reinterpret_cast<std::uintptr_t>(t.ptr()) % EIGEN_MAX_ALIGN_BYTES == 0);
  }
}

TEST_CASE("batchnorm running statistics") {
  Tape tape;
  Tensor rm({2}), rv({2}, Real(1));
  BatchNormState st{&rm, &rv, true, 0.9, 1e-5};
  const Var x = tape.constant(Tensor({2, 2}, {1, 10, 3, 30}));
  const Var gamma = tape.constant(Tensor({2}, {1, 1}));
  const Var beta = tape.constant(Tensor({2}, {0, 0}));
  const Tensor y = batchnorm1d(x, gamma, beta, st).value();
  CHECK(rm[0] == doctest::Approx(0.2));
  CHECK(rm[1] == doctest::Approx(2.0));
  // Unbiased batch variance of {1,3} is 2.
  CHECK(rv[0] == doctest::Approx(0.9 + 0.1 * 2.0));
  CHECK(y[0] == doctest::Approx(-1.0).epsilon(1e-4));
  st.training = false;
  const Tensor frozen_mean = rm;
  const Tensor e1 = batchnorm1d(x, gamma, beta, st).value();
  const Tensor e2 = batchnorm1d(x, gamma, beta, st).value();
  CHECK(e1 == e2);
  CHECK(rm == frozen_mean);
}
