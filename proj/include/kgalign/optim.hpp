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

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kgalign/errors.hpp"
#include "kgalign/rng.hpp"
#include "kgalign/tensor.hpp"

namespace kgalign::ad {

/// Uniform Xavier/Glorot initialization: values in +-sqrt(6/(fan_in+fan_out)).
/// For an r-by-c tensor the fans are r and c (a column vector gets n and 1).
template <typename Scalar>
Tensor<Scalar> xavier_init(std::size_t rows, std::size_t cols, Rng& rng,
                           bool requires_grad = true) {
  auto t = Tensor<Scalar>::zeros(rows, cols, requires_grad);
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (auto& v : t.values()) v = static_cast<Scalar>(rng.uniform(-bound, bound));
  return t;
}

/// Per-parameter Adam moments. beta1/beta2/eps are fixed at the conventional
/// values; the step counter drives bias correction.
template <typename Scalar>
struct AdamState {
  struct Slot {
    std::vector<Scalar> m;  // first moment
    std::vector<Scalar> v;  // second moment
  };
  std::vector<Slot> slots;
  uint64_t step_count = 0;

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
};

/// Adam with L2 weight decay folded into the gradient (g += wd * theta before
/// the moment updates). Gradients are zeroed after each step.
template <typename Scalar>
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Tensor<Scalar>> params, double lr, double weight_decay)
      : params_(std::move(params)), lr_(lr), weight_decay_(weight_decay) {
    state_.slots.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      state_.slots[i].m.assign(params_[i].numel(), Scalar(0));
      state_.slots[i].v.assign(params_[i].numel(), Scalar(0));
    }
  }

  std::size_t parameter_count() const { return params_.size(); }
  uint64_t step_count() const { return state_.step_count; }
  const std::vector<Tensor<Scalar>>& params() const { return params_; }

  void step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (!params_[i].has_grad()) {
        throw Error("adam_step: parameter " + std::to_string(i) +
                    " has no gradient; was it left out of the loss?");
      }
    }
    state_.step_count += 1;
    const double t = static_cast<double>(state_.step_count);
    const double bc1 = 1.0 - std::pow(AdamState<Scalar>::kBeta1, t);
    const double bc2 = 1.0 - std::pow(AdamState<Scalar>::kBeta2, t);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& theta = params_[i].values();
      auto& g = params_[i].grad();
      auto& m = state_.slots[i].m;
      auto& v = state_.slots[i].v;
      for (std::size_t j = 0; j < theta.size(); ++j) {
        const double grad =
            static_cast<double>(g[j]) + weight_decay_ * static_cast<double>(theta[j]);
        const double m1 = AdamState<Scalar>::kBeta1 * static_cast<double>(m[j]) +
                          (1.0 - AdamState<Scalar>::kBeta1) * grad;
        const double v1 = AdamState<Scalar>::kBeta2 * static_cast<double>(v[j]) +
                          (1.0 - AdamState<Scalar>::kBeta2) * grad * grad;
        m[j] = static_cast<Scalar>(m1);
        v[j] = static_cast<Scalar>(v1);
        const double mhat = m1 / bc1;
        const double vhat = v1 / bc2;
        theta[j] = static_cast<Scalar>(static_cast<double>(theta[j]) -
                                       lr_ * mhat / (std::sqrt(vhat) + AdamState<Scalar>::kEps));
      }
      params_[i].zero_grad();
    }
  }

 private:
  std::vector<Tensor<Scalar>> params_;
  AdamState<Scalar> state_;
  double lr_;
  double weight_decay_;
};

}  // namespace kgalign::ad
