/* Copyright 2026 The kgalign Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "kgalign/errors.hpp"
#include "kgalign/rng.hpp"

namespace kgalign::ad {

/// Slope of LeakyReLU used throughout (the conventional graph-attention value).
inline constexpr double kLeakyReluSlope = 0.2;

template <typename Scalar>
struct TensorPayload {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Scalar> value;
  std::vector<Scalar> grad;  // allocated lazily on first accumulation
  bool requires_grad = false;
};

/// Dense row-major 2-D tensor handle. Copies share the underlying payload,
/// so gradient accumulation is additive across every use of the same tensor.
/// Vectors are represented as n-by-1 columns or 1-by-n rows.
template <typename Scalar>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false) {
    Tensor t;
    t.payload_ = std::make_shared<TensorPayload<Scalar>>();
    t.payload_->rows = rows;
    t.payload_->cols = cols;
    t.payload_->value.assign(rows * cols, Scalar(0));
    t.payload_->requires_grad = requires_grad;
    return t;
  }

  static Tensor full(std::size_t rows, std::size_t cols, Scalar fill) {
    Tensor t = zeros(rows, cols);
    std::fill(t.values().begin(), t.values().end(), fill);
    return t;
  }

  static Tensor ones(std::size_t rows, std::size_t cols) { return full(rows, cols, Scalar(1)); }

  static Tensor from_data(std::size_t rows, std::size_t cols, std::vector<Scalar> data,
                          bool requires_grad = false) {
    if (data.size() != rows * cols) {
      throw ShapeError("Tensor::from_data: " + std::to_string(data.size()) +
                       " values for a " + std::to_string(rows) + "x" +
                       std::to_string(cols) + " tensor");
    }
    Tensor t;
    t.payload_ = std::make_shared<TensorPayload<Scalar>>();
    t.payload_->rows = rows;
    t.payload_->cols = cols;
    t.payload_->value = std::move(data);
    t.payload_->requires_grad = requires_grad;
    return t;
  }

  static Tensor scalar_value(Scalar v) { return from_data(1, 1, {v}); }

  static Tensor column(std::vector<Scalar> data, bool requires_grad = false) {
    const std::size_t n = data.size();
    return from_data(n, 1, std::move(data), requires_grad);
  }

  bool valid() const { return payload_ != nullptr; }
  std::size_t rows() const { return payload_->rows; }
  std::size_t cols() const { return payload_->cols; }
  std::size_t numel() const { return payload_->value.size(); }
  bool is_scalar() const { return numel() == 1; }

  std::vector<Scalar>& values() { return payload_->value; }
  const std::vector<Scalar>& values() const { return payload_->value; }

  Scalar& at(std::size_t r, std::size_t c) { return payload_->value[r * cols() + c]; }
  Scalar at(std::size_t r, std::size_t c) const { return payload_->value[r * cols() + c]; }
  Scalar scalar() const {
    if (!is_scalar()) throw ShapeError("Tensor::scalar: tensor is not 1x1");
    return payload_->value[0];
  }

  bool requires_grad() const { return payload_->requires_grad; }
  void set_requires_grad(bool rg) { payload_->requires_grad = rg; }

  bool has_grad() const { return !payload_->grad.empty(); }
  void ensure_grad() {
    if (payload_->grad.empty()) payload_->grad.assign(numel(), Scalar(0));
  }
  std::vector<Scalar>& grad() {
    ensure_grad();
    return payload_->grad;
  }
  const std::vector<Scalar>& grad() const { return payload_->grad; }
  void zero_grad() { std::fill(payload_->grad.begin(), payload_->grad.end(), Scalar(0)); }
  void drop_grad() { payload_->grad.clear(); }

  /// Deep copy of the values; gradient state is not copied.
  Tensor clone() const {
    Tensor t = from_data(rows(), cols(), payload_->value, payload_->requires_grad);
    return t;
  }

  /// Overwrite values in place (shape must match).
  void assign_values(const std::vector<Scalar>& data) {
    if (data.size() != numel()) throw ShapeError("Tensor::assign_values: size mismatch");
    payload_->value = data;
  }

  bool same_payload(const Tensor& other) const { return payload_ == other.payload_; }

 private:
  std::shared_ptr<TensorPayload<Scalar>> payload_;
};

namespace detail {

inline std::string dims(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

/// C(m x n) += op(A) * op(B) where op optionally transposes. A and B are the
/// stored (untransposed) buffers; `ta`/`tb` select the transposed reading.
/// Accumulation order over k is fixed, so per-element results are
/// deterministic and independent of other rows.
template <typename S>
void gemm_acc(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k,
              const S* a, const S* b, S* c) {
  if (!ta && !tb) {
    // a: m x k, b: k x n
    for (std::size_t i = 0; i < m; ++i) {
      S* crow = c + i * n;
      const S* arow = a + i * k;
      for (std::size_t p = 0; p < k; ++p) {
        const S aip = arow[p];
        if (aip == S(0)) continue;
        const S* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
  } else if (!ta && tb) {
    // a: m x k, b: n x k
    for (std::size_t i = 0; i < m; ++i) {
      const S* arow = a + i * k;
      S* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        const S* brow = b + j * k;
        S acc = S(0);
        for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        crow[j] += acc;
      }
    }
  } else if (ta && !tb) {
    // a: k x m, b: k x n
    for (std::size_t p = 0; p < k; ++p) {
      const S* arow = a + p * m;
      const S* brow = b + p * n;
      for (std::size_t i = 0; i < m; ++i) {
        const S api = arow[i];
        if (api == S(0)) continue;
        S* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += api * brow[j];
      }
    }
  } else {
    // a: k x m, b: n x k
    for (std::size_t i = 0; i < m; ++i) {
      S* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        const S* brow = b + j * k;
        S acc = S(0);
        for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i] * brow[p];
        crow[j] += acc;
      }
    }
  }
}

}  // namespace detail

/// Reverse-mode tape. Forward ops append backward closures; backward() replays
/// them once in reverse order (a valid reverse topological order, since ops are
/// recorded in execution order) and then clears the tape. Construction and
/// replay are single-threaded per training context.
template <typename Scalar>
class Tape {
 public:
  using T = Tensor<Scalar>;

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// Extension point: append a raw backward closure. All built-in ops go
  /// through here; tests may use it to register custom ops.
  void record(std::function<void()> backward_fn) { nodes_.push_back(std::move(backward_fn)); }

  /// Standard matrix product a(m x k) * b(k x n); with transpose_b, b is read
  /// as its transpose (a(m x k) * b(n x k)^T). Backward accumulates
  /// a.grad += g*b^T and b.grad += a^T*g (transpose-adjusted accordingly).
  T matmul(const T& a, const T& b, bool transpose_b = false) {
    const std::size_t m = a.rows();
    const std::size_t k = a.cols();
    const std::size_t n = transpose_b ? b.rows() : b.cols();
    const std::size_t bk = transpose_b ? b.cols() : b.rows();
    if (k != bk) {
      throw ShapeError("matmul: inner dimensions disagree: " + detail::dims(a.rows(), a.cols()) +
                       " * " + detail::dims(b.rows(), b.cols()) +
                       (transpose_b ? "^T" : ""));
    }
    T out = T::zeros(m, n);
    detail::gemm_acc<Scalar>(false, transpose_b, m, n, k, a.values().data(), b.values().data(),
                             out.values().data());
    if (a.requires_grad() || b.requires_grad()) {
      out.set_requires_grad(true);
      record([a = a, b = b, out, transpose_b, m, n, k]() mutable {
        if (!out.has_grad()) return;
        const Scalar* g = out.grad().data();
        if (a.requires_grad()) {
          a.ensure_grad();
          if (!transpose_b) {
            // dA = G * B^T : (m x n) * (n x k)^T-read of (k x n)
            detail::gemm_acc<Scalar>(false, true, m, k, n, g, b.values().data(), a.grad().data());
          } else {
            // C = A * B^T  =>  dA = G * B : (m x n) * (n x k)
            detail::gemm_acc<Scalar>(false, false, m, k, n, g, b.values().data(), a.grad().data());
          }
        }
        if (b.requires_grad()) {
          b.ensure_grad();
          if (!transpose_b) {
            // dB = A^T * G : (k x m)^T-read * (m x n)
            detail::gemm_acc<Scalar>(true, false, k, n, m, a.values().data(), g, b.grad().data());
          } else {
            // C = A * B^T  =>  dB = G^T * A : (n x m)^T-read * (m x k)
            detail::gemm_acc<Scalar>(true, false, n, k, m, g, a.values().data(), b.grad().data());
          }
        }
      });
    }
    return out;
  }

  /// Row/column softmax with max-subtraction stabilization. axis=1 normalizes
  /// each row, axis=0 each column.
  T softmax(const T& x, int axis) {
    if (axis != 0 && axis != 1) throw ShapeError("softmax: axis must be 0 or 1");
    const std::size_t r = x.rows(), c = x.cols();
    T out = T::zeros(r, c);
    const auto& xv = x.values();
    auto& ov = out.values();
    const std::size_t groups = (axis == 1) ? r : c;
    const std::size_t span = (axis == 1) ? c : r;
    const std::size_t stride = (axis == 1) ? 1 : c;
    for (std::size_t gidx = 0; gidx < groups; ++gidx) {
      const std::size_t base = (axis == 1) ? gidx * c : gidx;
      Scalar mx = -std::numeric_limits<Scalar>::infinity();
      for (std::size_t i = 0; i < span; ++i) mx = std::max(mx, xv[base + i * stride]);
      Scalar denom = Scalar(0);
      for (std::size_t i = 0; i < span; ++i) {
        const Scalar e = std::exp(xv[base + i * stride] - mx);
        ov[base + i * stride] = e;
        denom += e;
      }
      for (std::size_t i = 0; i < span; ++i) ov[base + i * stride] /= denom;
    }
    if (x.requires_grad()) {
      out.set_requires_grad(true);
      record([x = x, out, axis]() mutable {
        if (!out.has_grad()) return;
        x.ensure_grad();
        const std::size_t r = out.rows(), c = out.cols();
        const auto& y = out.values();
        const auto& g = out.grad();
        auto& xg = x.grad();
        const std::size_t groups = (axis == 1) ? r : c;
        const std::size_t span = (axis == 1) ? c : r;
        const std::size_t stride = (axis == 1) ? 1 : c;
        for (std::size_t gidx = 0; gidx < groups; ++gidx) {
          const std::size_t base = (axis == 1) ? gidx * c : gidx;
          Scalar dot = Scalar(0);
          for (std::size_t i = 0; i < span; ++i)
            dot += g[base + i * stride] * y[base + i * stride];
          for (std::size_t i = 0; i < span; ++i)
            xg[base + i * stride] += y[base + i * stride] * (g[base + i * stride] - dot);
        }
      });
    }
    return out;
  }

  T leaky_relu(const T& x) {
    return unary(x, "leaky_relu",
                 [](Scalar v) {
                   return v > Scalar(0) ? v : Scalar(kLeakyReluSlope) * v;
                 },
                 // derivative at 0 defined as the slope
                 [](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(kLeakyReluSlope); });
  }

  T relu(const T& x) {
    return unary(x, "relu", [](Scalar v) { return v > Scalar(0) ? v : Scalar(0); },
                 [](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); });
  }

  T exp(const T& x) {
    T out = unary(x, "exp", [](Scalar v) { return std::exp(v); },
                  [](Scalar) { return Scalar(0); }, /*use_output_grad=*/true);
    return out;
  }

  T log(const T& x) {
    for (const Scalar v : x.values()) {
      if (!(v > Scalar(0))) {
        throw NumericError("log: non-positive operand " + std::to_string(static_cast<double>(v)));
      }
    }
    return unary(x, "log", [](Scalar v) { return std::log(v); },
                 [](Scalar v) { return Scalar(1) / v; });
  }

  T neg(const T& x) {
    return unary(x, "neg", [](Scalar v) { return -v; }, [](Scalar) { return Scalar(-1); });
  }

  T add(const T& a, const T& b) { return binary(a, b, BinaryKind::kAdd); }
  T sub(const T& a, const T& b) { return binary(a, b, BinaryKind::kSub); }
  T mul(const T& a, const T& b) { return binary(a, b, BinaryKind::kMul); }

  T scalar_mul(const T& x, Scalar factor) {
    T out = T::zeros(x.rows(), x.cols());
    const auto& xv = x.values();
    auto& ov = out.values();
    for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = factor * xv[i];
    if (x.requires_grad()) {
      out.set_requires_grad(true);
      record([x = x, out, factor]() mutable {
        if (!out.has_grad()) return;
        x.ensure_grad();
        const auto& g = out.grad();
        auto& xg = x.grad();
        for (std::size_t i = 0; i < g.size(); ++i) xg[i] += factor * g[i];
      });
    }
    return out;
  }

  /// Juxtapose tensors along `axis` (0 stacks rows, 1 widens columns).
  /// Backward splits the gradient back to the inputs.
  T concat(const std::vector<T>& parts, int axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
    std::size_t rows = parts[0].rows(), cols = parts[0].cols();
    for (std::size_t i = 1; i < parts.size(); ++i) {
      if (axis == 1) {
        if (parts[i].rows() != rows)
          throw ShapeError("concat axis 1: row counts disagree");
        cols += parts[i].cols();
      } else {
        if (parts[i].cols() != cols)
          throw ShapeError("concat axis 0: column counts disagree");
        rows += parts[i].rows();
      }
    }
    T out = T::zeros(rows, cols);
    bool rg = false;
    if (axis == 1) {
      std::size_t col_off = 0;
      for (const T& part : parts) {
        for (std::size_t r = 0; r < part.rows(); ++r) {
          std::copy(part.values().begin() + r * part.cols(),
                    part.values().begin() + (r + 1) * part.cols(),
                    out.values().begin() + r * cols + col_off);
        }
        col_off += part.cols();
        rg = rg || part.requires_grad();
      }
    } else {
      std::size_t row_off = 0;
      for (const T& part : parts) {
        std::copy(part.values().begin(), part.values().end(),
                  out.values().begin() + row_off * cols);
        row_off += part.rows();
        rg = rg || part.requires_grad();
      }
    }
    if (rg) {
      out.set_requires_grad(true);
      std::vector<T> held = parts;
      record([held, out, axis]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad();
        const std::size_t cols = out.cols();
        if (axis == 1) {
          std::size_t col_off = 0;
          for (T& part : held) {
            if (part.requires_grad()) {
              part.ensure_grad();
              auto& pg = part.grad();
              for (std::size_t r = 0; r < part.rows(); ++r)
                for (std::size_t c = 0; c < part.cols(); ++c)
                  pg[r * part.cols() + c] += g[r * cols + col_off + c];
            }
            col_off += part.cols();
          }
        } else {
          std::size_t row_off = 0;
          for (T& part : held) {
            if (part.requires_grad()) {
              part.ensure_grad();
              auto& pg = part.grad();
              for (std::size_t i = 0; i < part.numel(); ++i) pg[i] += g[row_off * cols + i];
            }
            row_off += part.rows();
          }
        }
      });
    }
    return out;
  }

  /// out[s] = sum over rows e with segments[e] == s of weights[e] * values[e].
  /// Empty segments yield zero rows. Rows are accumulated in index order, so
  /// results are deterministic.
  T segment_weighted_sum(const T& values, const T& weights,
                         const std::vector<int32_t>& segments, std::size_t n_segments) {
    const std::size_t e = values.rows(), d = values.cols();
    if (weights.numel() != e || weights.cols() != 1) {
      throw ShapeError("segment_weighted_sum: weights must be " + std::to_string(e) + "x1");
    }
    if (segments.size() != e) throw ShapeError("segment_weighted_sum: segment ids per row");
    for (const int32_t s : segments) {
      if (s < 0 || static_cast<std::size_t>(s) >= n_segments) {
        throw ShapeError("segment_weighted_sum: segment id " + std::to_string(s) +
                         " out of range [0, " + std::to_string(n_segments) + ")");
      }
    }
    T out = T::zeros(n_segments, d);
    {
      const auto& vv = values.values();
      const auto& wv = weights.values();
      auto& ov = out.values();
      for (std::size_t row = 0; row < e; ++row) {
        const Scalar w = wv[row];
        Scalar* orow = ov.data() + static_cast<std::size_t>(segments[row]) * d;
        const Scalar* vrow = vv.data() + row * d;
        for (std::size_t j = 0; j < d; ++j) orow[j] += w * vrow[j];
      }
    }
    if (values.requires_grad() || weights.requires_grad()) {
      out.set_requires_grad(true);
      record([values = values, weights = weights, out, segments, d]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad();
        const auto& vv = values.values();
        const auto& wv = weights.values();
        if (values.requires_grad()) {
          values.ensure_grad();
          auto& vg = values.grad();
          for (std::size_t row = 0; row < segments.size(); ++row) {
            const Scalar w = wv[row];
            const Scalar* grow = g.data() + static_cast<std::size_t>(segments[row]) * d;
            Scalar* vgrow = vg.data() + row * d;
            for (std::size_t j = 0; j < d; ++j) vgrow[j] += w * grow[j];
          }
        }
        if (weights.requires_grad()) {
          weights.ensure_grad();
          auto& wg = weights.grad();
          for (std::size_t row = 0; row < segments.size(); ++row) {
            const Scalar* grow = g.data() + static_cast<std::size_t>(segments[row]) * d;
            const Scalar* vrow = vv.data() + row * d;
            Scalar acc = Scalar(0);
            for (std::size_t j = 0; j < d; ++j) acc += grow[j] * vrow[j];
            wg[row] += acc;
          }
        }
      });
    }
    return out;
  }

  /// Gather rows of `table` by id. Backward scatter-adds into table.grad, so a
  /// row looked up twice receives twice the gradient.
  T lookup_rows(const T& table, const std::vector<int32_t>& ids) {
    const std::size_t n = table.rows(), d = table.cols();
    for (const int32_t id : ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= n) {
        throw ShapeError("lookup_rows: id " + std::to_string(id) + " out of range [0, " +
                         std::to_string(n) + ")");
      }
    }
    T out = T::zeros(ids.size(), d);
    {
      const auto& tv = table.values();
      auto& ov = out.values();
      for (std::size_t i = 0; i < ids.size(); ++i) {
        std::copy(tv.begin() + static_cast<std::size_t>(ids[i]) * d,
                  tv.begin() + (static_cast<std::size_t>(ids[i]) + 1) * d, ov.begin() + i * d);
      }
    }
    if (table.requires_grad()) {
      out.set_requires_grad(true);
      record([table = table, out, ids, d]() mutable {
        if (!out.has_grad()) return;
        table.ensure_grad();
        const auto& g = out.grad();
        auto& tg = table.grad();
        for (std::size_t i = 0; i < ids.size(); ++i) {
          Scalar* trow = tg.data() + static_cast<std::size_t>(ids[i]) * d;
          const Scalar* grow = g.data() + i * d;
          for (std::size_t j = 0; j < d; ++j) trow[j] += grow[j];
        }
      });
    }
    return out;
  }

  /// Inverted dropout: each element is zeroed with probability `rate` and
  /// survivors are scaled by 1/(1-rate). Identity outside training.
  T dropout(const T& x, double rate, bool training, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout: rate must be in [0, 1)");
    if (!training || rate == 0.0) return x;
    const Scalar keep_scale = Scalar(1.0 / (1.0 - rate));
    auto mask = std::make_shared<std::vector<Scalar>>(x.numel());
    T out = T::zeros(x.rows(), x.cols());
    const auto& xv = x.values();
    auto& ov = out.values();
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const Scalar m = rng.uniform() < rate ? Scalar(0) : keep_scale;
      (*mask)[i] = m;
      ov[i] = m * xv[i];
    }
    if (x.requires_grad()) {
      out.set_requires_grad(true);
      record([x = x, out, mask]() mutable {
        if (!out.has_grad()) return;
        x.ensure_grad();
        const auto& g = out.grad();
        auto& xg = x.grad();
        for (std::size_t i = 0; i < g.size(); ++i) xg[i] += (*mask)[i] * g[i];
      });
    }
    return out;
  }

  /// Seed d(loss)/d(loss) = 1, replay recorded ops in reverse, then clear the
  /// tape. Every requires_grad tensor reachable from `loss` ends up with its
  /// accumulated gradient.
  void backward(T loss) {
    if (!loss.is_scalar()) {
      throw ShapeError("backward: loss must be scalar, got " +
                       detail::dims(loss.rows(), loss.cols()));
    }
    if (loss.requires_grad()) {
      loss.grad()[0] += Scalar(1);
      for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    }
    nodes_.clear();
  }

 private:
  enum class BinaryKind { kAdd, kSub, kMul };
  enum class Broadcast { kNone, kRow, kCol };

  T unary(const T& x, const char* /*name*/, Scalar (*fwd)(Scalar), Scalar (*dfv)(Scalar),
          bool use_output_grad = false) {
    T out = T::zeros(x.rows(), x.cols());
    const auto& xv = x.values();
    auto& ov = out.values();
    for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = fwd(xv[i]);
    if (x.requires_grad()) {
      out.set_requires_grad(true);
      record([x = x, out, dfv, use_output_grad]() mutable {
        if (!out.has_grad()) return;
        x.ensure_grad();
        const auto& g = out.grad();
        auto& xg = x.grad();
        if (use_output_grad) {
          // d/dx exp(x) = exp(x), read from the stored output
          const auto& y = out.values();
          for (std::size_t i = 0; i < g.size(); ++i) xg[i] += y[i] * g[i];
        } else {
          const auto& xvb = x.values();
          for (std::size_t i = 0; i < g.size(); ++i) xg[i] += dfv(xvb[i]) * g[i];
        }
      });
    }
    return out;
  }

  static Broadcast broadcast_mode(const T& a, const T& b) {
    if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::kNone;
    if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::kRow;
    if (b.cols() == 1 && b.rows() == a.rows()) return Broadcast::kCol;
    throw ShapeError("elementwise: incompatible shapes " + detail::dims(a.rows(), a.cols()) +
                     " vs " + detail::dims(b.rows(), b.cols()));
  }

  /// Elementwise add/sub/mul. The second operand may be a broadcast 1-by-c row
  /// or r-by-1 column; its gradient is then the reduction over the broadcast
  /// dimension.
  T binary(const T& a, const T& b, BinaryKind kind) {
    const Broadcast bc = broadcast_mode(a, b);
    const std::size_t r = a.rows(), c = a.cols();
    T out = T::zeros(r, c);
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    auto b_at = [&](std::size_t i, std::size_t j) -> Scalar {
      switch (bc) {
        case Broadcast::kNone: return bv[i * c + j];
        case Broadcast::kRow: return bv[j];
        case Broadcast::kCol: return bv[i];
      }
      return Scalar(0);
    };
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        const Scalar x = av[i * c + j];
        const Scalar y = b_at(i, j);
        Scalar v;
        switch (kind) {
          case BinaryKind::kAdd: v = x + y; break;
          case BinaryKind::kSub: v = x - y; break;
          case BinaryKind::kMul: v = x * y; break;
        }
        ov[i * c + j] = v;
      }
    }
    if (a.requires_grad() || b.requires_grad()) {
      out.set_requires_grad(true);
      record([a = a, b = b, out, kind, bc, r, c]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad();
        const auto& av = a.values();
        const auto& bv = b.values();
        if (a.requires_grad()) {
          a.ensure_grad();
          auto& ag = a.grad();
          for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
              const std::size_t idx = i * c + j;
              Scalar factor = Scalar(1);
              if (kind == BinaryKind::kMul) {
                factor = (bc == Broadcast::kNone)  ? bv[idx]
                         : (bc == Broadcast::kRow) ? bv[j]
                                                   : bv[i];
              }
              ag[idx] += factor * g[idx];
            }
          }
        }
        if (b.requires_grad()) {
          b.ensure_grad();
          auto& bg = b.grad();
          const Scalar sign = (kind == BinaryKind::kSub) ? Scalar(-1) : Scalar(1);
          for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
              const std::size_t idx = i * c + j;
              const Scalar upstream =
                  (kind == BinaryKind::kMul) ? av[idx] * g[idx] : sign * g[idx];
              switch (bc) {
                case Broadcast::kNone: bg[idx] += upstream; break;
                case Broadcast::kRow: bg[j] += upstream; break;
                case Broadcast::kCol: bg[i] += upstream; break;
              }
            }
          }
        }
      });
    }
    return out;
  }

  std::vector<std::function<void()>> nodes_;
};

/// Sum of all entries as a 1x1 tensor, composed from matmuls with constant
/// ones vectors (differentiable through the primitives).
template <typename Scalar>
Tensor<Scalar> sum_all(Tape<Scalar>& tape, const Tensor<Scalar>& x) {
  auto left = Tensor<Scalar>::ones(1, x.rows());
  auto colsums = tape.matmul(left, x);  // 1 x cols
  if (x.cols() == 1) return colsums;
  auto right = Tensor<Scalar>::ones(x.cols(), 1);
  return tape.matmul(colsums, right);
}

/// Per-row sum as an n-by-1 column.
template <typename Scalar>
Tensor<Scalar> row_sum(Tape<Scalar>& tape, const Tensor<Scalar>& x) {
  auto right = Tensor<Scalar>::ones(x.cols(), 1);
  return tape.matmul(x, right);
}

/// Elementwise sqrt composed as exp(0.5*log(x + eps)); eps keeps the log away
/// from zero when rows coincide.
template <typename Scalar>
Tensor<Scalar> sqrt_positive(Tape<Scalar>& tape, const Tensor<Scalar>& x, Scalar eps) {
  auto shifted = tape.add(x, Tensor<Scalar>::full(x.rows(), x.cols(), eps));
  return tape.exp(tape.scalar_mul(tape.log(shifted), Scalar(0.5)));
}

/// True if any entry is NaN.
template <typename Scalar>
bool has_nan(const Tensor<Scalar>& x) {
  for (const Scalar v : x.values())
    if (std::isnan(static_cast<double>(v))) return true;
  return false;
}

}  // namespace kgalign::ad
