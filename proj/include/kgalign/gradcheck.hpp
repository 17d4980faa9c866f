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
#include <functional>
#include <string>
#include <vector>

#include "kgalign/rng.hpp"
#include "kgalign/tensor.hpp"

namespace kgalign::ad {

/// One finite-difference check: `make_inputs` builds fresh leaf tensors,
/// `build` applies the op under test and reduces it to a scalar probe loss.
/// `build` must be a pure function of the inputs (cases with internal
/// randomness reseed their own stream on every call).
struct GradCheckCase {
  std::string name;
  std::function<std::vector<Tensor<double>>(Rng&)> make_inputs;
  std::function<Tensor<double>(Tape<double>&, std::vector<Tensor<double>>&)> build;
  double tolerance = 1e-5;
};

struct GradCheckReport {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

namespace detail {

inline double relative_error(double analytic, double numeric) {
  const double denom = std::max(std::abs(analytic), std::abs(numeric));
  if (denom < 1e-7) return std::abs(analytic - numeric) < 1e-7 ? 0.0 : 1.0;
  return std::abs(analytic - numeric) / denom;
}

}  // namespace detail

/// Central finite differences (64-bit) against the tape's analytic gradients.
/// The numeric side never touches backward(): it re-runs the forward pass with
/// perturbed inputs, so it is an independent oracle for the recorded closures.
inline GradCheckReport run_gradcheck_case(const GradCheckCase& kase, double step = 1e-4,
                                          uint64_t input_seed = 7) {
  GradCheckReport report;
  report.name = kase.name;
  report.tolerance = kase.tolerance;

  Rng input_rng(input_seed);
  std::vector<Tensor<double>> inputs = kase.make_inputs(input_rng);

  // Analytic gradients.
  {
    Tape<double> tape;
    Tensor<double> loss = kase.build(tape, inputs);
    tape.backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (auto& t : inputs) {
    t.ensure_grad();
    analytic.push_back(t.grad());
  }

  // Numeric gradients by central differences over every input element.
  auto eval = [&]() {
    Tape<double> tape;
    return kase.build(tape, inputs).scalar();
  };
  double max_err = 0.0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    if (!inputs[t].requires_grad()) continue;
    auto& vals = inputs[t].values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double keep = vals[i];
      vals[i] = keep + step;
      const double up = eval();
      vals[i] = keep - step;
      const double down = eval();
      vals[i] = keep;
      const double numeric = (up - down) / (2.0 * step);
      max_err = std::max(max_err, detail::relative_error(analytic[t][i], numeric));
    }
  }
  report.max_rel_err = max_err;
  report.pass = max_err < kase.tolerance;
  return report;
}

/// The registry covering every differentiable primitive exactly once
/// (broadcast and transpose variants get their own entries).
inline std::vector<GradCheckCase> builtin_gradcheck_cases() {
  using T = Tensor<double>;
  auto random_tensor = [](std::size_t r, std::size_t c, Rng& rng) {
    T t = T::zeros(r, c, /*requires_grad=*/true);
    for (auto& v : t.values()) v = rng.uniform(-1.0, 1.0);
    return t;
  };
  // Keep kinked activations away from their kink so central differences hold.
  auto away_from_zero = [](T t) {
    for (auto& v : t.values()) {
      if (std::abs(v) < 0.05) v = v < 0 ? v - 0.05 : v + 0.05;
    }
    return t;
  };
  // A fixed random probe makes the scalar reduction sensitive to every output
  // element with distinct upstream gradients.
  auto probe_loss = [](Tape<double>& tape, const T& out) {
    Rng rng(1234);
    T probe = T::zeros(out.rows(), out.cols());
    for (auto& v : probe.values()) v = rng.uniform(-1.0, 1.0);
    return sum_all(tape, tape.mul(out, probe));
  };

  std::vector<GradCheckCase> cases;

  cases.push_back({"matmul",
                   [=](Rng& rng) {
                     return std::vector<T>{random_tensor(3, 4, rng), random_tensor(4, 2, rng)};
                   },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.matmul(in[0], in[1]));
                   }});
  cases.push_back({"matmul_transposed",
                   [=](Rng& rng) {
                     return std::vector<T>{random_tensor(3, 4, rng), random_tensor(2, 4, rng)};
                   },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.matmul(in[0], in[1], /*transpose_b=*/true));
                   }});
  cases.push_back({"softmax_rows",
                   [=](Rng& rng) { return std::vector<T>{random_tensor(4, 5, rng)}; },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.softmax(in[0], 1));
                   }});
  cases.push_back({"softmax_cols",
                   [=](Rng& rng) { return std::vector<T>{random_tensor(4, 5, rng)}; },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.softmax(in[0], 0));
                   }});
  cases.push_back({"leaky_relu",
                   [=](Rng& rng) {
                     return std::vector<T>{away_from_zero(random_tensor(4, 4, rng))};
                   },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.leaky_relu(in[0]));
                   }});
  cases.push_back({"relu",
                   [=](Rng& rng) {
                     return std::vector<T>{away_from_zero(random_tensor(4, 4, rng))};
                   },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.relu(in[0]));
                   }});
  cases.push_back({"exp", [=](Rng& rng) { return std::vector<T>{random_tensor(3, 4, rng)}; },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.exp(in[0]));
                   }});
  cases.push_back({"log",
                   [=](Rng& rng) {
                     T t = random_tensor(3, 4, rng);
                     for (auto& v : t.values()) v = 0.5 + std::abs(v);
                     return std::vector<T>{t};
                   },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.log(in[0]));
                   }});
  cases.push_back({"neg", [=](Rng& rng) { return std::vector<T>{random_tensor(3, 4, rng)}; },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.neg(in[0]));
                   }});
  cases.push_back({"add",
                   [=](Rng& rng) {
                     return std::vector<T>{random_tensor(3, 4, rng), random_tensor(3, 4, rng)};
                   },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.add(in[0], in[1]));
                   }});
  cases.push_back({"add_row_broadcast",
                   [=](Rng& rng) {
                     return std::vector<T>{random_tensor(3, 4, rng), random_tensor(1, 4, rng)};
                   },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.add(in[0], in[1]));
                   }});
  cases.push_back({"add_col_broadcast",
                   [=](Rng& rng) {
                     return std::vector<T>{random_tensor(3, 4, rng), random_tensor(3, 1, rng)};
                   },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.add(in[0], in[1]));
                   }});
  cases.push_back({"sub",
                   [=](Rng& rng) {
                     return std::vector<T>{random_tensor(3, 4, rng), random_tensor(3, 4, rng)};
                   },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.sub(in[0], in[1]));
                   }});
  cases.push_back({"sub_col_broadcast",
                   [=](Rng& rng) {
                     return std::vector<T>{random_tensor(3, 4, rng), random_tensor(3, 1, rng)};
                   },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.sub(in[0], in[1]));
                   }});
  cases.push_back({"mul",
                   [=](Rng& rng) {
                     return std::vector<T>{random_tensor(3, 4, rng), random_tensor(3, 4, rng)};
                   },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.mul(in[0], in[1]));
                   }});
  cases.push_back({"mul_row_broadcast",
                   [=](Rng& rng) {
                     return std::vector<T>{random_tensor(3, 4, rng), random_tensor(1, 4, rng)};
                   },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.mul(in[0], in[1]));
                   }});
  cases.push_back({"mul_col_broadcast",
                   [=](Rng& rng) {
                     return std::vector<T>{random_tensor(3, 4, rng), random_tensor(3, 1, rng)};
                   },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.mul(in[0], in[1]));
                   }});
  cases.push_back({"scalar_mul",
                   [=](Rng& rng) { return std::vector<T>{random_tensor(3, 4, rng)}; },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.scalar_mul(in[0], 0.37));
                   }});
  cases.push_back({"concat_rows",
                   [=](Rng& rng) {
                     return std::vector<T>{random_tensor(2, 3, rng), random_tensor(4, 3, rng)};
                   },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.concat({in[0], in[1]}, 0));
                   }});
  cases.push_back({"concat_cols",
                   [=](Rng& rng) {
                     return std::vector<T>{random_tensor(2, 3, rng), random_tensor(2, 5, rng)};
                   },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     return probe_loss(tape, tape.concat({in[0], in[1]}, 1));
                   }});
  cases.push_back({"segment_weighted_sum",
                   [=](Rng& rng) {
                     return std::vector<T>{random_tensor(6, 3, rng), random_tensor(6, 1, rng)};
                   },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     const std::vector<int32_t> segments{0, 1, 1, 3, 0, 3};
                     return probe_loss(tape,
                                       tape.segment_weighted_sum(in[0], in[1], segments, 4));
                   }});
  cases.push_back({"lookup_rows",
                   [=](Rng& rng) { return std::vector<T>{random_tensor(5, 3, rng)}; },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     // duplicate id 2 exercises scatter-add accumulation
                     const std::vector<int32_t> ids{2, 0, 2, 4};
                     return probe_loss(tape, tape.lookup_rows(in[0], ids));
                   }});
  cases.push_back({"dropout",
                   [=](Rng& rng) { return std::vector<T>{random_tensor(4, 4, rng)}; },
                   [=](Tape<double>& tape, std::vector<T>& in) {
                     // reseeded per call so every finite-difference evaluation
                     // sees the same mask
                     Rng mask_rng(99);
                     return probe_loss(tape, tape.dropout(in[0], 0.4, /*training=*/true, mask_rng));
                   }});
  return cases;
}

inline std::vector<GradCheckReport> run_builtin_gradchecks(double step = 1e-4) {
  std::vector<GradCheckReport> reports;
  for (const auto& kase : builtin_gradcheck_cases()) {
    reports.push_back(run_gradcheck_case(kase, step));
  }
  return reports;
}

}  // namespace kgalign::ad
