// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "ndal/error.hpp"
#include "ndal/gradcheck.hpp"
#include "ndal/losses.hpp"
#include "support/op_cases.hpp"

using namespace ndal;

namespace {

double scalar(const Var& v) { return static_cast<double>(v.value().item()); }

/// Independent cross-entropy of row-wise softmax over `logits`.
double reference_ce(const std::vector<std::vector<double>>& logits,
                    const std::vector<std::int64_t>& labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    double mx = -1e300;
    for (double z : logits[i]) mx = std::max(mx, z);
    double s = 0.0;
    for (double z : logits[i]) s += std::exp(z - mx);
    total += -(logits[i][static_cast<std::size_t>(labels[i])] - mx - std::log(s));
  }
  return total / static_cast<double>(logits.size());
}

std::vector<std::vector<double>> rows_of(const Tensor& t) {
  const std::size_t n = t.shape()[0], c = t.shape()[1];
  std::vector<std::vector<double>> out(n, std::vector<double>(c));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[i][j] = t[i * c + j];
  }
  return out;
}

}  // namespace

TEST_CASE("reconstruction and feature-robust losses") {
  Tape tape;
  Rng rng(1);
  const Tensor a = test::randn({3, 192}, rng), b = test::randn({3, 192}, rng);
  CHECK(scalar(loss_rec(tape.constant(a), tape.constant(a))) == 0.0);
  CHECK(scalar(loss_fr(tape.constant(b), tape.constant(b))) == 0.0);

  // Per-element mean convention: zeros against ones is 1, not 192.
  CHECK(scalar(loss_rec(tape.constant(Tensor({1, 192})), tape.constant(Tensor({1, 192}, Real(1))))) ==
        doctest::Approx(1.0).epsilon(1e-7));

  double expected = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) expected += (a[i] - b[i]) * (a[i] - b[i]);
  expected /= static_cast<double>(a.numel());
  CHECK(scalar(loss_rec(tape.constant(a), tape.constant(b))) ==
        doctest::Approx(expected).epsilon(1e-6));
  CHECK(scalar(loss_fr(tape.constant(a), tape.constant(b))) ==
        scalar(loss_fr(tape.constant(b), tape.constant(a))));
  CHECK(scalar(loss_rec(tape.constant(a), tape.constant(b))) > 0.0);
  CHECK_THROWS_AS(loss_rec(tape.constant(a), tape.constant(Tensor({3, 191}))), Error);
}

TEST_CASE("loss_fr gradient matches finite differences on 2x8 latents") {
  Rng rng(2);
  TensorProgram f = [](Tape&, std::span<const Var> in) { return loss_fr(in[0], in[1]); };
  const GradCheckReport r = grad_check(f, {test::randn({2, 8}, rng), test::randn({2, 8}, rng)});
  CHECK(r.entries.size() == 32);
  CHECK(r.max_rel_error < 1e-3);
}

TEST_CASE("loss_fr stop-gradient option blocks the clean branch") {
  Tape tape;
  Rng rng(3);
  const Var c = tape.leaf(test::randn({2, 8}, rng));
  const Var s = tape.leaf(test::randn({2, 8}, rng));
  const Gradients g = tape.backward(loss_fr(c, s, true));
  for (Real v : g.at(c.id()).data()) CHECK(v == Real(0));
  bool any = false;
  for (Real v : g.at(s.id()).data()) any = any || v != Real(0);
  CHECK(any);
}

TEST_CASE("AAM with zero margin and unit scale is cosine-softmax cross-entropy") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = test::dim(rng), c = test::dim(rng, 2, 8);
    const Tensor cosine = test::uniform({n, c}, rng, -1.0, 1.0);
    const auto labels = test::labels(n, c, rng);
    Tape tape;
    const double got = scalar(loss_aam(tape.constant(cosine), labels, 1.0, 0.0));
    CHECK(std::abs(got - reference_ce(rows_of(cosine), labels)) < 1e-6);
  }
}

TEST_CASE("AAM hand-computed aligned example") {
  // Embedding aligned with class row 0; class row 1 at angle with cosine c2.
  const double c2 = 0.3;
  Tape tape;
  const Tensor cosine({1, 2}, {1.0, c2});
  const std::vector<std::int64_t> label{0};
  const double got = scalar(loss_aam(tape.constant(cosine), label, 30.0, 0.2));
  const double t = std::exp(30.0 * std::cos(0.2)), o = std::exp(30.0 * c2);
  CHECK(got == doctest::Approx(-std::log(t / (t + o))).epsilon(1e-5));
}

TEST_CASE("AAM decreases as the target cosine increases") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor cosine = test::uniform({1, 5}, rng, -0.9, 0.9);
    const std::vector<std::int64_t> label{2};
    double prev = 1e300;
    for (double v = -0.99; v <= 0.99; v += 0.05) {
      cosine[2] = static_cast<Real>(v);
      Tape tape;
      const double loss = scalar(loss_aam(tape.constant(cosine), label, 30.0, 0.2));
      CHECK(loss < prev);
      prev = loss;
    }
  }
}

TEST_CASE("AAM easy-margin fallback and label checks") {
  Tape tape;
  // cos <= cos(pi - m): target logit is cos - m * sin(pi - m), not cos(theta + m).
  const double m = 0.2, cos_t = -0.995;
  const Tensor cosine({1, 2}, {static_cast<Real>(cos_t), 0.0});
  const std::vector<std::int64_t> label{0};
  const double got = scalar(loss_aam(tape.constant(cosine), label, 1.0, m));
  const double target = cos_t - m * std::sin(std::numbers::pi - m);
  CHECK(got == doctest::Approx(reference_ce({{target, 0.0}}, label)).epsilon(1e-6));

  const std::vector<std::int64_t> bad{2};
  CHECK_THROWS_AS(loss_aam(tape.constant(cosine), bad, 30.0, 0.2), Error);
  try {
    loss_aam(tape.constant(cosine), bad, 30.0, 0.2);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kLabelOutOfRange);
  }
}

TEST_CASE("adversarial cross-entropy") {
  Tape tape;
  const std::vector<std::int64_t> labels{0, 1, 1, 0};
  CHECK(scalar(loss_adv(tape.constant(Tensor({4, 2})), labels)) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-7));
  const Tensor confident({4, 2}, {20, -20, -20, 20, -20, 20, 20, -20});
  CHECK(scalar(loss_adv(tape.constant(confident), labels)) < 1e-12);

  Rng rng(6);
  const Tensor logits = test::randn({6, 2}, rng, 3.0);
  const std::vector<std::int64_t> aug{0, 0, 0, 1, 1, 1};
  CHECK(scalar(loss_adv(tape.constant(logits), aug)) ==
        doctest::Approx(reference_ce(rows_of(logits), aug)).epsilon(1e-6));
  const std::vector<std::int64_t> bad{0, 0, 0, 1, 1, 2};
  CHECK_THROWS_AS(loss_adv(tape.constant(logits), bad), Error);
}

TEST_CASE("loss_total combines terms and reports the signed total") {
  Tape tape;
  LossTerms zero;
  zero.rec = tape.constant(Tensor::scalar(0));
  zero.fr = tape.constant(Tensor::scalar(0));
  zero.cls = tape.constant(Tensor::scalar(0));
  zero.adv = tape.constant(Tensor::scalar(0));
  const Objective z = loss_total(tape, zero, 1.0);
  CHECK(scalar(z.value) == 0.0);
  CHECK(z.parts.l_total == 0.0);

  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    LossTerms terms;
    terms.rec = tape.constant(Tensor::scalar(static_cast<Real>(rng.uniform(0, 2))));
    terms.fr = tape.constant(Tensor::scalar(static_cast<Real>(rng.uniform(0, 2))));
    terms.cls = tape.constant(Tensor::scalar(static_cast<Real>(rng.uniform(0, 20))));
    terms.adv = tape.constant(Tensor::scalar(static_cast<Real>(rng.uniform(0, 1))));
    const double lambda = rng.uniform(0.1, 10.0);
    const Objective o = loss_total(tape, terms, lambda);
    const LossBreakdown& p = o.parts;
    CHECK(p.l_total == p.l_rec + p.l_fr + p.l_cls - lambda * p.l_adv);
    CHECK(p.lambda == lambda);
    CHECK(scalar(o.value) ==
          doctest::Approx(p.l_rec + p.l_fr + p.l_cls + p.l_adv).epsilon(1e-6));
  }

  LossTerms bad;
  bad.rec = tape.constant(Tensor::scalar(std::numeric_limits<Real>::infinity()));
  CHECK_THROWS_AS(loss_total(tape, bad, 1.0), Error);
}
