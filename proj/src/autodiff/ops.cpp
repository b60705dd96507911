// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ndal/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "ndal/error.hpp"

NDAL_CORE_NAMESPACE_BEGIN

namespace {

using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<Mat>;
using CMapM = Eigen::Map<const Mat>;

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::kShapeMismatch, what);
}

void require_rank(const Var& v, std::size_t rank, const char* op) {
  require(v.value().rank() == rank, std::string(op) + ": expected rank " +
                                        std::to_string(rank) + ", got " +
                                        shape_str(v.shape()));
}

std::size_t last_dim(const Tensor& t) {
  require(t.rank() >= 1, "op needs rank >= 1");
  return t.shape().back();
}

/// Size of the broadcast block when b's shape is a suffix of a's.
std::size_t broadcast_inner(const Shape& a, const Shape& b, const char* op) {
  bool ok = b.size() <= a.size();
  for (std::size_t i = 0; ok && i < b.size(); ++i) {
    ok = a[a.size() - b.size() + i] == b[i];
  }
  require(ok, std::string(op) + ": cannot broadcast " + shape_str(b) + " onto " +
                  shape_str(a));
  return shape_numel(b);
}

template <typename F>
Var unary(const Var& x, F&& f, Tape::BackwardFn back) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.numel(); ++i) out[i] = f(in[i]);
  return x.tape().record(std::move(out), {x}, std::move(back));
}

void check_labels(std::span<const std::int64_t> labels, std::size_t rows,
                  std::size_t classes, const char* op) {
  require(labels.size() == rows, std::string(op) + ": label count " +
                                     std::to_string(labels.size()) +
                                     " != rows " + std::to_string(rows));
  for (std::int64_t y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      fail(ErrorCode::kLabelOutOfRange,
           std::string(op) + ": label " + std::to_string(y) + " outside [0," +
               std::to_string(classes) + ")");
    }
  }
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  require(b.shape()[0] == k, "matmul: inner dims " + shape_str(a.shape()) +
                                 " x " + shape_str(b.shape()));
  Tensor out({m, n});
  MapM(out.ptr(), m, n).noalias() =
      CMapM(a.value().ptr(), m, k) * CMapM(b.value().ptr(), k, n);
  return a.tape().record(std::move(out), {a, b}, [a, b, m, k, n](Tape& t, const Tensor& g) {
    CMapM G(g.ptr(), m, n);
    if (Tensor* ga = t.sink(a)) {
      MapM(ga->ptr(), m, k).noalias() += G * CMapM(b.value().ptr(), k, n).transpose();
    }
    if (Tensor* gb = t.sink(b)) {
      MapM(gb->ptr(), k, n).noalias() += CMapM(a.value().ptr(), m, k).transpose() * G;
    }
  });
}

Var linear(const Var& x, const Var& weight, const Var* bias) {
  require_rank(x, 2, "linear");
  require_rank(weight, 2, "linear");
  const std::size_t n = x.shape()[0], in = x.shape()[1], out_dim = weight.shape()[0];
  require(weight.shape()[1] == in, "linear: input " + shape_str(x.shape()) +
                                       " vs weight " + shape_str(weight.shape()));
  if (bias) {
    require(bias->shape() == Shape{out_dim},
            "linear: bias " + shape_str(bias->shape()));
  }
  Tensor out({n, out_dim});
  MapM Y(out.ptr(), n, out_dim);
  Y.noalias() = CMapM(x.value().ptr(), n, in) *
                CMapM(weight.value().ptr(), out_dim, in).transpose();
  if (bias) {
    Y.rowwise() += Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>>(
        bias->value().ptr(), out_dim);
  }
  std::vector<Var> inputs{x, weight};
  if (bias) inputs.push_back(*bias);
  const bool has_bias = bias != nullptr;
  const Var b = has_bias ? *bias : Var();
  return x.tape().record(
      std::move(out), inputs, [x, weight, b, has_bias, n, in, out_dim](Tape& t, const Tensor& g) {
        CMapM G(g.ptr(), n, out_dim);
        if (Tensor* gx = t.sink(x)) {
          MapM(gx->ptr(), n, in).noalias() +=
              G * CMapM(weight.value().ptr(), out_dim, in);
        }
        if (Tensor* gw = t.sink(weight)) {
          MapM(gw->ptr(), out_dim, in).noalias() +=
              G.transpose() * CMapM(x.value().ptr(), n, in);
        }
        if (has_bias) {
          if (Tensor* gb = t.sink(b)) {
            Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>>(gb->ptr(), out_dim) +=
                G.colwise().sum();
          }
        }
      });
}

Var conv1d(const Var& x, const Var& weight, const Var* bias, std::size_t dilation,
           std::size_t padding) {
  require_rank(x, 3, "conv1d");
  require_rank(weight, 3, "conv1d");
  require(dilation >= 1, "conv1d: dilation must be >= 1");
  const std::size_t n = x.shape()[0], cin = x.shape()[1], steps = x.shape()[2];
  const std::size_t cout = weight.shape()[0], kernel = weight.shape()[2];
  require(weight.shape()[1] == cin, "conv1d: input " + shape_str(x.shape()) +
                                        " vs weight " + shape_str(weight.shape()));
  const std::size_t span = dilation * (kernel - 1);
  require(steps + 2 * padding > span,
          "conv1d: kernel span " + std::to_string(span + 1) + " exceeds padded length " +
              std::to_string(steps + 2 * padding));
  if (bias) {
    require(bias->shape() == Shape{cout}, "conv1d: bias " + shape_str(bias->shape()));
  }
  const std::size_t tout = steps + 2 * padding - span;
  const std::size_t rows = cin * kernel, cols_n = n * tout;

  // im2col: cols[(ci*K + k), b*tout + t] = x[b, ci, t + k*dilation - padding]
  auto cols = std::make_shared<Tensor>(Shape{rows, cols_n});
  const Real* xv = x.value().ptr();
  Real* cv = cols->ptr();
  for (std::size_t ci = 0; ci < cin; ++ci) {
    for (std::size_t k = 0; k < kernel; ++k) {
      const std::ptrdiff_t offset = static_cast<std::ptrdiff_t>(k * dilation) -
                                    static_cast<std::ptrdiff_t>(padding);
      Real* row = cv + (ci * kernel + k) * cols_n;
      for (std::size_t b = 0; b < n; ++b) {
        const Real* src = xv + (b * cin + ci) * steps;
        Real* dst = row + b * tout;
        for (std::size_t t = 0; t < tout; ++t) {
          const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t) + offset;
          dst[t] = (s >= 0 && s < static_cast<std::ptrdiff_t>(steps)) ? src[s] : Real(0);
        }
      }
    }
  }
  Mat y = CMapM(weight.value().ptr(), cout, rows) * CMapM(cv, rows, cols_n);
  Tensor out({n, cout, tout});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t co = 0; co < cout; ++co) {
      const Real bv = bias ? bias->value()[co] : Real(0);
      const Real* src = y.data() + co * cols_n + b * tout;
      Real* dst = out.ptr() + (b * cout + co) * tout;
      for (std::size_t t = 0; t < tout; ++t) dst[t] = src[t] + bv;
    }
  }

  std::vector<Var> inputs{x, weight};
  if (bias) inputs.push_back(*bias);
  const bool has_bias = bias != nullptr;
  const Var bvar = has_bias ? *bias : Var();
  return x.tape().record(
      std::move(out), inputs,
      [=](Tape& t, const Tensor& g) {
        Mat gm(cout, cols_n);
        for (std::size_t b = 0; b < n; ++b) {
          for (std::size_t co = 0; co < cout; ++co) {
            std::copy_n(g.ptr() + (b * cout + co) * tout, tout,
                        gm.data() + co * cols_n + b * tout);
          }
        }
        if (Tensor* gw = t.sink(weight)) {
          MapM(gw->ptr(), cout, rows).noalias() +=
              gm * CMapM(cols->ptr(), rows, cols_n).transpose();
        }
        if (has_bias) {
          if (Tensor* gb = t.sink(bvar)) {
            Eigen::Map<Eigen::Matrix<Real, Eigen::Dynamic, 1>>(gb->ptr(), cout) +=
                gm.rowwise().sum();
          }
        }
        if (Tensor* gx = t.sink(x)) {
          Mat dcols = CMapM(weight.value().ptr(), cout, rows).transpose() * gm;
          Real* gxv = gx->ptr();
          for (std::size_t ci = 0; ci < cin; ++ci) {
            for (std::size_t k = 0; k < kernel; ++k) {
              const std::ptrdiff_t offset = static_cast<std::ptrdiff_t>(k * dilation) -
                                            static_cast<std::ptrdiff_t>(padding);
              const Real* row = dcols.data() + (ci * kernel + k) * cols_n;
              for (std::size_t b = 0; b < n; ++b) {
                Real* dst = gxv + (b * cin + ci) * steps;
                const Real* src = row + b * tout;
                for (std::size_t tt = 0; tt < tout; ++tt) {
                  const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(tt) + offset;
                  if (s >= 0 && s < static_cast<std::ptrdiff_t>(steps)) dst[s] += src[tt];
                }
              }
            }
          }
        }
      });
}

Var batchnorm1d(const Var& x, const Var& gamma, const Var& beta,
                const BatchNormState& state) {
  const Tensor& in = x.value();
  require(in.rank() == 2 || in.rank() == 3,
          "batchnorm1d: expected [n,c] or [n,c,t], got " + shape_str(in.shape()));
  const std::size_t n = in.dim(0), c = in.dim(1), len = in.rank() == 3 ? in.dim(2) : 1;
  require(gamma.shape() == Shape{c} && beta.shape() == Shape{c},
          "batchnorm1d: affine params must be [" + std::to_string(c) + "]");
  require(state.running_mean && state.running_var &&
              state.running_mean->shape() == Shape{c} &&
              state.running_var->shape() == Shape{c},
          "batchnorm1d: running statistics missing or mis-shaped");
  const std::size_t count = n * len;
  if (state.training) require(count >= 2, "batchnorm1d: training needs >= 2 values per channel");

  auto mean = std::make_shared<std::vector<double>>(c);
  auto inv_std = std::make_shared<std::vector<double>>(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double mu, var;
    if (state.training) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const Real* p = in.ptr() + (i * c + ch) * len;
        for (std::size_t l = 0; l < len; ++l) s += p[l];
      }
      mu = s / static_cast<double>(count);
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const Real* p = in.ptr() + (i * c + ch) * len;
        for (std::size_t l = 0; l < len; ++l) ss += (p[l] - mu) * (p[l] - mu);
      }
      var = ss / static_cast<double>(count);
      Real& rm = (*state.running_mean)[ch];
      Real& rv = (*state.running_var)[ch];
      rm = static_cast<Real>(state.momentum * rm + (1.0 - state.momentum) * mu);
      rv = static_cast<Real>(state.momentum * rv +
                             (1.0 - state.momentum) * var * static_cast<double>(count) /
                                 static_cast<double>(count - 1));
    } else {
      mu = (*state.running_mean)[ch];
      var = (*state.running_var)[ch];
    }
    (*mean)[ch] = mu;
    (*inv_std)[ch] = 1.0 / std::sqrt(var + state.eps);
  }

  Tensor out(in.shape());
  auto xhat = std::make_shared<Tensor>(in.shape());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (i * c + ch) * len;
      for (std::size_t l = 0; l < len; ++l) {
        const double h = (in[base + l] - (*mean)[ch]) * (*inv_std)[ch];
        (*xhat)[base + l] = static_cast<Real>(h);
        out[base + l] = static_cast<Real>(gamma.value()[ch] * h + beta.value()[ch]);
      }
    }
  }
  const bool training = state.training;
  return x.tape().record(
      std::move(out), {x, gamma, beta},
      [=](Tape& t, const Tensor& g) {
        const Tensor& gam = gamma.value();
        if (Tensor* gg = t.sink(gamma)) {
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t ch = 0; ch < c; ++ch)
              for (std::size_t l = 0; l < len; ++l) {
                const std::size_t k = (i * c + ch) * len + l;
                (*gg)[ch] += g[k] * (*xhat)[k];
              }
        }
        if (Tensor* gb = t.sink(beta)) {
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t ch = 0; ch < c; ++ch)
              for (std::size_t l = 0; l < len; ++l) (*gb)[ch] += g[(i * c + ch) * len + l];
        }
        Tensor* gx = t.sink(x);
        if (!gx) return;
        if (!training) {
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t ch = 0; ch < c; ++ch)
              for (std::size_t l = 0; l < len; ++l) {
                const std::size_t k = (i * c + ch) * len + l;
                (*gx)[k] += static_cast<Real>(g[k] * gam[ch] * (*inv_std)[ch]);
              }
          return;
        }
        std::vector<double> sum_d(c, 0.0), sum_dx(c, 0.0);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t l = 0; l < len; ++l) {
              const std::size_t k = (i * c + ch) * len + l;
              const double d = static_cast<double>(g[k]) * gam[ch];
              sum_d[ch] += d;
              sum_dx[ch] += d * (*xhat)[k];
            }
        const double m = static_cast<double>(count);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t l = 0; l < len; ++l) {
              const std::size_t k = (i * c + ch) * len + l;
              const double d = static_cast<double>(g[k]) * gam[ch];
              (*gx)[k] += static_cast<Real>((*inv_std)[ch] / m *
                                            (m * d - sum_d[ch] - (*xhat)[k] * sum_dx[ch]));
            }
      });
}

Var relu(const Var& x) {
  return unary(x, [](Real v) { return v > 0 ? v : Real(0); },
               [x](Tape& t, const Tensor& g) {
                 if (Tensor* gx = t.sink(x)) {
                   const Tensor& in = x.value();
                   for (std::size_t i = 0; i < g.numel(); ++i)
                     if (in[i] > 0) (*gx)[i] += g[i];
                 }
               });
}

Var tanh(const Var& x) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.numel(); ++i) out[i] = std::tanh(in[i]);
  auto saved = std::make_shared<Tensor>(out);
  return x.tape().record(std::move(out), {x}, [x, saved](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.sink(x)) {
      for (std::size_t i = 0; i < g.numel(); ++i) {
        const Real y = (*saved)[i];
        (*gx)[i] += g[i] * (1 - y * y);
      }
    }
  });
}

Var sqrt(const Var& x) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.numel(); ++i) out[i] = std::sqrt(in[i]);
  auto saved = std::make_shared<Tensor>(out);
  return x.tape().record(std::move(out), {x}, [x, saved](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.sink(x)) {
      for (std::size_t i = 0; i < g.numel(); ++i) {
        const Real y = (*saved)[i];
        if (y > 0) (*gx)[i] += g[i] / (2 * y);
      }
    }
  });
}

Var clamp_min(const Var& x, double lo) {
  const Real bound = static_cast<Real>(lo);
  return unary(x, [bound](Real v) { return v > bound ? v : bound; },
               [x, bound](Tape& t, const Tensor& g) {
                 if (Tensor* gx = t.sink(x)) {
                   const Tensor& in = x.value();
                   for (std::size_t i = 0; i < g.numel(); ++i)
                     if (in[i] > bound) (*gx)[i] += g[i];
                 }
               });
}

Var square(const Var& x) {
  return unary(x, [](Real v) { return v * v; }, [x](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.sink(x)) {
      const Tensor& in = x.value();
      for (std::size_t i = 0; i < g.numel(); ++i) (*gx)[i] += 2 * in[i] * g[i];
    }
  });
}

Var mul_scalar(const Var& x, double c) {
  const Real s = static_cast<Real>(c);
  return unary(x, [s](Real v) { return v * s; }, [x, s](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.sink(x)) {
      for (std::size_t i = 0; i < g.numel(); ++i) (*gx)[i] += g[i] * s;
    }
  });
}

namespace {

enum class Binary { kAdd, kSub, kMul };

Var binary(const Var& a, const Var& b, Binary kind, const char* name) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t inner = broadcast_inner(av.shape(), bv.shape(), name);
  const std::size_t outer = inner == 0 ? 0 : av.numel() / inner;
  Tensor out(av.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < inner; ++j) {
      const std::size_t k = o * inner + j;
      switch (kind) {
        case Binary::kAdd: out[k] = av[k] + bv[j]; break;
        case Binary::kSub: out[k] = av[k] - bv[j]; break;
        case Binary::kMul: out[k] = av[k] * bv[j]; break;
      }
    }
  }
  return a.tape().record(std::move(out), {a, b}, [=](Tape& t, const Tensor& g) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (Tensor* ga = t.sink(a)) {
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t j = 0; j < inner; ++j) {
          const std::size_t k = o * inner + j;
          (*ga)[k] += kind == Binary::kMul ? g[k] * B[j] : g[k];
        }
    }
    if (Tensor* gb = t.sink(b)) {
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t j = 0; j < inner; ++j) {
          const std::size_t k = o * inner + j;
          switch (kind) {
            case Binary::kAdd: (*gb)[j] += g[k]; break;
            case Binary::kSub: (*gb)[j] -= g[k]; break;
            case Binary::kMul: (*gb)[j] += g[k] * A[k]; break;
          }
        }
    }
  });
}

}  // namespace

Var add(const Var& a, const Var& b) { return binary(a, b, Binary::kAdd, "add"); }
Var sub(const Var& a, const Var& b) { return binary(a, b, Binary::kSub, "sub"); }
Var mul(const Var& a, const Var& b) { return binary(a, b, Binary::kMul, "mul"); }

Var softmax(const Var& x) {
  const Tensor& in = x.value();
  const std::size_t len = last_dim(in);
  const std::size_t rows = len == 0 ? 0 : in.numel() / len;
  Tensor out(in.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* src = in.ptr() + r * len;
    Real* dst = out.ptr() + r * len;
    const Real mx = *std::max_element(src, src + len);
    double total = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
      dst[j] = std::exp(src[j] - mx);
      total += dst[j];
    }
    for (std::size_t j = 0; j < len; ++j) dst[j] = static_cast<Real>(dst[j] / total);
  }
  auto saved = std::make_shared<Tensor>(out);
  return x.tape().record(std::move(out), {x}, [x, saved, rows, len](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.sink(x)) {
      for (std::size_t r = 0; r < rows; ++r) {
        const Real* y = saved->ptr() + r * len;
        const Real* gr = g.ptr() + r * len;
        double dot = 0.0;
        for (std::size_t j = 0; j < len; ++j) dot += static_cast<double>(gr[j]) * y[j];
        for (std::size_t j = 0; j < len; ++j)
          (*gx)[r * len + j] += static_cast<Real>(y[j] * (gr[j] - dot));
      }
    }
  });
}

Var log_softmax(const Var& x) {
  const Tensor& in = x.value();
  const std::size_t len = last_dim(in);
  const std::size_t rows = len == 0 ? 0 : in.numel() / len;
  Tensor out(in.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* src = in.ptr() + r * len;
    Real* dst = out.ptr() + r * len;
    const Real mx = *std::max_element(src, src + len);
    double total = 0.0;
    for (std::size_t j = 0; j < len; ++j) total += std::exp(static_cast<double>(src[j] - mx));
    const double lse = mx + std::log(total);
    for (std::size_t j = 0; j < len; ++j) dst[j] = static_cast<Real>(src[j] - lse);
  }
  auto saved = std::make_shared<Tensor>(out);
  return x.tape().record(std::move(out), {x}, [x, saved, rows, len](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.sink(x)) {
      for (std::size_t r = 0; r < rows; ++r) {
        const Real* y = saved->ptr() + r * len;
        const Real* gr = g.ptr() + r * len;
        double total = 0.0;
        for (std::size_t j = 0; j < len; ++j) total += gr[j];
        for (std::size_t j = 0; j < len; ++j)
          (*gx)[r * len + j] += static_cast<Real>(gr[j] - std::exp(static_cast<double>(y[j])) * total);
      }
    }
  });
}

Var l2_normalize(const Var& x) {
  constexpr double kFloor = 1e-12;
  const Tensor& in = x.value();
  const std::size_t len = last_dim(in);
  const std::size_t rows = len == 0 ? 0 : in.numel() / len;
  Tensor out(in.shape());
  auto norms = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* src = in.ptr() + r * len;
    double ss = 0.0;
    for (std::size_t j = 0; j < len; ++j) ss += static_cast<double>(src[j]) * src[j];
    const double norm = std::sqrt(ss);
    (*norms)[r] = norm;
    const double denom = std::max(norm, kFloor);
    for (std::size_t j = 0; j < len; ++j) out[r * len + j] = static_cast<Real>(src[j] / denom);
  }
  auto saved = std::make_shared<Tensor>(out);
  return x.tape().record(std::move(out), {x}, [=](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.sink(x)) {
      for (std::size_t r = 0; r < rows; ++r) {
        const double norm = (*norms)[r];
        const Real* y = saved->ptr() + r * len;
        const Real* gr = g.ptr() + r * len;
        if (norm <= kFloor) {
          for (std::size_t j = 0; j < len; ++j)
            (*gx)[r * len + j] += static_cast<Real>(gr[j] / kFloor);
          continue;
        }
        double dot = 0.0;
        for (std::size_t j = 0; j < len; ++j) dot += static_cast<double>(y[j]) * gr[j];
        for (std::size_t j = 0; j < len; ++j)
          (*gx)[r * len + j] += static_cast<Real>((gr[j] - y[j] * dot) / norm);
      }
    }
  });
}

Var mean(const Var& x) {
  const Tensor& in = x.value();
  require(in.numel() > 0, "mean of empty tensor");
  double s = 0.0;
  for (Real v : in.data()) s += v;
  const std::size_t count = in.numel();
  Tensor out = Tensor::scalar(static_cast<Real>(s / static_cast<double>(count)));
  return x.tape().record(std::move(out), {x}, [x, count](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.sink(x)) {
      const Real share = static_cast<Real>(g[0] / static_cast<double>(count));
      for (Real& v : gx->data()) v += share;
    }
  });
}

Var sum_last(const Var& x) {
  const Tensor& in = x.value();
  const std::size_t len = last_dim(in);
  const std::size_t rows = len == 0 ? 0 : in.numel() / len;
  Shape shape(in.shape().begin(), in.shape().end() - 1);
  Tensor out(shape);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < len; ++j) s += in[r * len + j];
    out[r] = static_cast<Real>(s);
  }
  return x.tape().record(std::move(out), {x}, [x, rows, len](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.sink(x)) {
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < len; ++j) (*gx)[r * len + j] += g[r];
    }
  });
}

Var concat(std::span<const Var> xs, std::size_t axis) {
  require(!xs.empty(), "concat: no inputs");
  const Shape& first = xs[0].shape();
  require(axis < first.size(), "concat: axis out of range");
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
  std::vector<std::size_t> chunk(xs.size());
  Shape shape = first;
  shape[axis] = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const Shape& s = xs[k].shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
    require(ok, "concat: " + shape_str(s) + " incompatible with " + shape_str(first));
    shape[axis] += s[axis];
    chunk[k] = outer == 0 ? 0 : xs[k].value().numel() / outer;
  }
  Tensor out(shape);
  std::size_t row = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) row += chunk[k];
  std::size_t col = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const Real* src = xs[k].value().ptr();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(src + o * chunk[k], chunk[k], out.ptr() + o * row + col);
    col += chunk[k];
  }
  std::vector<Var> inputs(xs.begin(), xs.end());
  return xs[0].tape().record(std::move(out), xs, [inputs, chunk, outer, row](Tape& t, const Tensor& g) {
    std::size_t c = 0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      if (Tensor* gx = t.sink(inputs[k])) {
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t j = 0; j < chunk[k]; ++j)
            (*gx)[o * chunk[k] + j] += g[o * row + c + j];
      }
      c += chunk[k];
    }
  });
}

Var concat(std::initializer_list<Var> xs, std::size_t axis) {
  return concat(std::span<const Var>(xs.begin(), xs.size()), axis);
}

Var slice_rows(const Var& x, std::size_t begin, std::size_t end) {
  const Tensor& in = x.value();
  require(in.rank() >= 1 && begin < end && end <= in.dim(0),
          "slice_rows: [" + std::to_string(begin) + "," + std::to_string(end) +
              ") out of " + shape_str(in.shape()));
  const std::size_t stride = in.numel() / in.dim(0);
  Shape shape = in.shape();
  shape[0] = end - begin;
  Tensor out(shape);
  std::copy_n(in.ptr() + begin * stride, (end - begin) * stride, out.ptr());
  return x.tape().record(std::move(out), {x}, [x, begin, stride](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.sink(x)) {
      for (std::size_t i = 0; i < g.numel(); ++i) (*gx)[begin * stride + i] += g[i];
    }
  });
}

Var pick(const Var& x, std::span<const std::int64_t> labels) {
  require_rank(x, 2, "pick");
  const std::size_t n = x.shape()[0], c = x.shape()[1];
  check_labels(labels, n, c, "pick");
  Tensor out({n});
  for (std::size_t i = 0; i < n; ++i) out[i] = x.value()[i * c + labels[i]];
  std::vector<std::int64_t> ys(labels.begin(), labels.end());
  return x.tape().record(std::move(out), {x}, [x, ys, c](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.sink(x)) {
      for (std::size_t i = 0; i < ys.size(); ++i) (*gx)[i * c + ys[i]] += g[i];
    }
  });
}

Var angular_margin(const Var& cosine, std::span<const std::int64_t> labels,
                   double margin, double scale) {
  require_rank(cosine, 2, "angular_margin");
  const std::size_t n = cosine.shape()[0], c = cosine.shape()[1];
  check_labels(labels, n, c, "angular_margin");
  const double cos_m = std::cos(margin), sin_m = std::sin(margin);
  const double threshold = std::cos(std::numbers::pi - margin);
  const double fallback = std::sin(std::numbers::pi - margin) * margin;
  const Tensor& in = cosine.value();
  Tensor out(in.shape());
  // d(target logit)/d(cosine) per row.
  auto slope = std::make_shared<std::vector<double>>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = static_cast<Real>(scale * in[i * c + j]);
    const double cv = std::clamp(static_cast<double>(in[i * c + labels[i]]), -1.0, 1.0);
    double phi, d;
    if (cv > threshold) {
      const double sin_t = std::sqrt(std::max(1.0 - cv * cv, 0.0));
      phi = cv * cos_m - sin_t * sin_m;
      d = sin_t > 1e-12 ? cos_m + sin_m * cv / sin_t : cos_m;
    } else {
      phi = cv - fallback;
      d = 1.0;
    }
    out[i * c + labels[i]] = static_cast<Real>(scale * phi);
    (*slope)[i] = scale * d;
  }
  std::vector<std::int64_t> ys(labels.begin(), labels.end());
  return cosine.tape().record(std::move(out), {cosine}, [=](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.sink(cosine)) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          const std::size_t k = i * c + j;
          (*gx)[k] += static_cast<Real>(static_cast<std::int64_t>(j) == ys[i]
                                            ? g[k] * (*slope)[i]
                                            : g[k] * scale);
        }
      }
    }
  });
}

Var grad_reverse(const Var& x, double lambda) {
  if (!(lambda > 0.0)) {
    fail(ErrorCode::kNonPositiveLambda, "grad_reverse: lambda must be > 0, got " +
                                            std::to_string(lambda));
  }
  const Real neg = static_cast<Real>(-lambda);
  return x.tape().record(x.value(), {x}, [x, neg](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.sink(x)) {
      for (std::size_t i = 0; i < g.numel(); ++i) (*gx)[i] += neg * g[i];
    }
  });
}

Var detach(const Var& x) { return x.tape().constant(x.value()); }

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::kMatmul: return "matmul";
    case OpKind::kLinear: return "linear";
    case OpKind::kConv1d: return "conv1d";
    case OpKind::kRelu: return "relu";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSqrt: return "sqrt";
    case OpKind::kClampMin: return "clamp_min";
    case OpKind::kBatchnorm1d: return "batchnorm1d";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kLogSoftmax: return "log_softmax";
    case OpKind::kMean: return "mean";
    case OpKind::kSumLast: return "sum_last";
    case OpKind::kConcat: return "concat";
    case OpKind::kSliceRows: return "slice_rows";
    case OpKind::kL2Normalize: return "l2_normalize";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kMulScalar: return "mul_scalar";
    case OpKind::kSquare: return "square";
    case OpKind::kPick: return "pick";
    case OpKind::kAngularMargin: return "angular_margin";
    case OpKind::kGradReverse: return "grad_reverse";
  }
  return "unknown";
}

const std::vector<OpKind>& all_op_kinds() {
  static const std::vector<OpKind> kinds{
      OpKind::kMatmul,     OpKind::kLinear,      OpKind::kConv1d,     OpKind::kRelu,
      OpKind::kTanh,       OpKind::kSqrt,        OpKind::kClampMin,   OpKind::kBatchnorm1d,
      OpKind::kSoftmax,    OpKind::kLogSoftmax,  OpKind::kMean,       OpKind::kSumLast,
      OpKind::kConcat,     OpKind::kSliceRows,   OpKind::kL2Normalize, OpKind::kAdd,
      OpKind::kSub,        OpKind::kMul,         OpKind::kMulScalar,  OpKind::kSquare,
      OpKind::kPick,       OpKind::kAngularMargin, OpKind::kGradReverse};
  return kinds;
}

Var apply(OpKind kind, std::span<const Var> inputs, const OpAttrs& attrs) {
  auto need = [&](std::size_t count) {
    require(inputs.size() >= count, std::string(to_string(kind)) + ": needs " +
                                        std::to_string(count) + " inputs");
  };
  switch (kind) {
    case OpKind::kMatmul: need(2); return matmul(inputs[0], inputs[1]);
    case OpKind::kLinear:
      need(2);
      return linear(inputs[0], inputs[1], inputs.size() > 2 ? &inputs[2] : nullptr);
    case OpKind::kConv1d:
      need(2);
      return conv1d(inputs[0], inputs[1], inputs.size() > 2 ? &inputs[2] : nullptr,
                    attrs.dilation, attrs.padding);
    case OpKind::kRelu: need(1); return relu(inputs[0]);
    case OpKind::kTanh: need(1); return tanh(inputs[0]);
    case OpKind::kSqrt: need(1); return sqrt(inputs[0]);
    case OpKind::kClampMin: need(1); return clamp_min(inputs[0], attrs.scalar);
    case OpKind::kBatchnorm1d:
      need(3);
      return batchnorm1d(inputs[0], inputs[1], inputs[2], attrs.batchnorm);
    case OpKind::kSoftmax: need(1); return softmax(inputs[0]);
    case OpKind::kLogSoftmax: need(1); return log_softmax(inputs[0]);
    case OpKind::kMean: need(1); return mean(inputs[0]);
    case OpKind::kSumLast: need(1); return sum_last(inputs[0]);
    case OpKind::kConcat: need(1); return concat(inputs, attrs.axis);
    case OpKind::kSliceRows: need(1); return slice_rows(inputs[0], attrs.begin, attrs.end);
    case OpKind::kL2Normalize: need(1); return l2_normalize(inputs[0]);
    case OpKind::kAdd: need(2); return add(inputs[0], inputs[1]);
    case OpKind::kSub: need(2); return sub(inputs[0], inputs[1]);
    case OpKind::kMul: need(2); return mul(inputs[0], inputs[1]);
    case OpKind::kMulScalar: need(1); return mul_scalar(inputs[0], attrs.scalar);
    case OpKind::kSquare: need(1); return square(inputs[0]);
    case OpKind::kPick: need(1); return pick(inputs[0], attrs.labels);
    case OpKind::kAngularMargin:
      need(1);
      return angular_margin(inputs[0], attrs.labels, attrs.margin, attrs.scale);
    case OpKind::kGradReverse: need(1); return grad_reverse(inputs[0], attrs.scalar);
  }
  fail(ErrorCode::kInvalidArgument, "unknown op kind");
}

NDAL_CORE_NAMESPACE_END
