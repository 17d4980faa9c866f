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
#include <string>
#include <utility>
#include <vector>

#include "kgalign/encoder.hpp"
#include "kgalign/eval.hpp"
#include "kgalign/kg.hpp"
#include "kgalign/rng.hpp"
#include "kgalign/tensor.hpp"

namespace kgalign {

/// One corrupted alignment: the seed it came from plus the replacement pair.
/// Exactly one side differs from the ground-truth pair.
struct NegativePair {
  int32_t seed_index = 0;
  EntityId source = 0;
  EntityId target = 0;
};

struct NegativeSampleSet {
  std::vector<NegativePair> pairs;
  bool truncation_fallback = false;  // a window smaller than k forced replacement draws
};

namespace detail {

/// The `window` nearest entities to `query` (excluding itself) by Euclidean
/// distance, deterministic under ties (distance, then id).
inline std::vector<EntityId> nearest_window(const EmbeddingMatrix& emb, EntityId query,
                                            std::size_t window) {
  std::vector<std::pair<double, EntityId>> order;
  order.reserve(emb.rows - 1);
  const double* q = emb.row(static_cast<std::size_t>(query));
  for (std::size_t j = 0; j < emb.rows; ++j) {
    if (static_cast<EntityId>(j) == query) continue;
    double acc = 0.0;
    const double* r = emb.row(j);
    for (std::size_t c = 0; c < emb.cols; ++c) {
      const double diff = q[c] - r[c];
      acc += diff * diff;
    }
    order.emplace_back(acc, static_cast<EntityId>(j));
  }
  window = std::min(window, order.size());
  std::partial_sort(order.begin(), order.begin() + window, order.end());
  std::vector<EntityId> ids(window);
  for (std::size_t i = 0; i < window; ++i) ids[i] = order[i].second;
  return ids;
}

inline void draw_from_window(const std::vector<EntityId>& window, std::size_t k, Rng& rng,
                             std::vector<EntityId>& out, bool* fallback) {
  if (window.size() >= k) {
    for (const std::size_t pick : rng.sample_without_replacement(window.size(), k)) {
      out.push_back(window[pick]);
    }
  } else {
    *fallback = true;
    for (std::size_t i = 0; i < k; ++i) {
      out.push_back(window[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<int64_t>(window.size()) - 1))]);
    }
  }
}

}  // namespace detail

/// Epsilon-truncated uniform negative sampling: for each seed pair and each
/// side, draw k replacements uniformly from the ceil((1-epsilon)*N) entities
/// nearest to the replaced one in its own graph (itself excluded), using the
/// latest original-graph embeddings. A window smaller than k falls back to
/// sampling with replacement.
inline NegativeSampleSet sample_negatives(
    const std::vector<std::pair<EntityId, EntityId>>& seeds,
    const EmbeddingMatrix& source_embeddings, const EmbeddingMatrix& target_embeddings,
    double epsilon, int k, Rng& rng) {
  if (epsilon < 0.0 || epsilon >= 1.0) {
    throw ConfigError("sample_negatives: epsilon must be in [0, 1)");
  }
  if (k < 1) throw ConfigError("sample_negatives: k must be >= 1");
  NegativeSampleSet result;
  result.pairs.reserve(seeds.size() * 2 * static_cast<std::size_t>(k));

  auto window_size = [&](std::size_t n) {
    const auto w = static_cast<std::size_t>(
        std::ceil((1.0 - epsilon) * static_cast<double>(n)));
    return std::max<std::size_t>(1, std::min(w, n - 1));
  };
  const std::size_t w_src = window_size(source_embeddings.rows);
  const std::size_t w_tgt = window_size(target_embeddings.rows);

  std::vector<EntityId> draws;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const auto& [src, tgt] = seeds[s];
    draws.clear();
    detail::draw_from_window(detail::nearest_window(source_embeddings, src, w_src),
                             static_cast<std::size_t>(k), rng, draws,
                             &result.truncation_fallback);
    for (const EntityId corrupted : draws) {
      result.pairs.push_back({static_cast<int32_t>(s), corrupted, tgt});
    }
    draws.clear();
    detail::draw_from_window(detail::nearest_window(target_embeddings, tgt, w_tgt),
                             static_cast<std::size_t>(k), rng, draws,
                             &result.truncation_fallback);
    for (const EntityId corrupted : draws) {
      result.pairs.push_back({static_cast<int32_t>(s), src, corrupted});
    }
  }
  return result;
}

/// relu(h W + b): the shared projection into the contrastive space.
template <typename Scalar>
ad::Tensor<Scalar> apply_projection(ad::Tape<Scalar>& tape, const ProjectionHead<Scalar>& head,
                                    const ad::Tensor<Scalar>& h) {
  return tape.relu(tape.add(tape.matmul(h, head.weight), head.bias));
}

namespace detail {

/// Row L2 norms of (a - b) as an n-by-1 column.
template <typename Scalar>
ad::Tensor<Scalar> row_distance(ad::Tape<Scalar>& tape, const ad::Tensor<Scalar>& a,
                                const ad::Tensor<Scalar>& b) {
  auto diff = tape.sub(a, b);
  auto sq = ad::row_sum(tape, tape.mul(diff, diff));
  return ad::sqrt_positive(tape, sq, Scalar(1e-12));
}

/// Row maxima as a constant n-by-1 tensor (log-sum-exp stabilizer).
template <typename Scalar>
ad::Tensor<Scalar> row_max_constant(const ad::Tensor<Scalar>& x) {
  auto m = ad::Tensor<Scalar>::zeros(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    Scalar best = x.at(i, 0);
    for (std::size_t j = 1; j < x.cols(); ++j) best = std::max(best, x.at(i, j));
    m.values()[i] = best;
  }
  return m;
}

/// Per-row -log softmax-diagonal term of one contrast direction:
///   out_i = logsumexp_k <p_i, q_k> - <p_i, q_i>.
template <typename Scalar>
ad::Tensor<Scalar> infonce_terms(ad::Tape<Scalar>& tape, const ad::Tensor<Scalar>& p,
                                 const ad::Tensor<Scalar>& q,
                                 const ad::Tensor<Scalar>& diagonal) {
  auto sim = tape.matmul(p, q, /*transpose_b=*/true);  // n x n inner products
  auto shift = row_max_constant(sim);
  auto lse = tape.add(tape.log(ad::row_sum(tape, tape.exp(tape.sub(sim, shift)))), shift);
  return tape.sub(lse, diagonal);
}

}  // namespace detail

/// Margin-based alignment loss over seed pairs S and their corrupted pairs:
///   sum [ ||h_i - h_j|| + margin - ||h_ibar - h_jbar|| ]_+
/// computed on whichever view's embeddings the caller passes in.
template <typename Scalar>
ad::Tensor<Scalar> margin_alignment_loss(ad::Tape<Scalar>& tape,
                                         const ad::Tensor<Scalar>& source_final,
                                         const ad::Tensor<Scalar>& target_final,
                                         const std::vector<std::pair<EntityId, EntityId>>& seeds,
                                         const NegativeSampleSet& negatives, double margin) {
  using T = ad::Tensor<Scalar>;
  if (seeds.empty()) throw ConfigError("margin_alignment_loss: no seed pairs");

  std::vector<int32_t> pos_src(seeds.size()), pos_tgt(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    pos_src[i] = seeds[i].first;
    pos_tgt[i] = seeds[i].second;
  }
  auto pos_dist = detail::row_distance(tape, tape.lookup_rows(source_final, pos_src),
                                       tape.lookup_rows(target_final, pos_tgt));
  if (negatives.pairs.empty()) {
    return T::scalar_value(Scalar(0));  // the hinge sum over an empty corruption set
  }

  std::vector<int32_t> neg_src(negatives.pairs.size()), neg_tgt(negatives.pairs.size()),
      owner(negatives.pairs.size());
  for (std::size_t i = 0; i < negatives.pairs.size(); ++i) {
    neg_src[i] = negatives.pairs[i].source;
    neg_tgt[i] = negatives.pairs[i].target;
    owner[i] = negatives.pairs[i].seed_index;
  }
  auto neg_dist = detail::row_distance(tape, tape.lookup_rows(source_final, neg_src),
                                       tape.lookup_rows(target_final, neg_tgt));
  auto pos_per_neg = tape.lookup_rows(pos_dist, owner);
  auto hinge = tape.relu(tape.add(tape.sub(pos_per_neg, neg_dist),
                                  T::scalar_value(static_cast<Scalar>(margin))));
  return ad::sum_all(tape, hinge);
}

/// Symmetric InfoNCE between original and augmented projections, summed over
/// both graphs:
///   sum_z 1/(2|E_z|) sum_i [ -log softmax_i(<p_i, q_.>) - log softmax_i(<q_i, p_.>) ]
/// with p/q the projected original/augmented rows of graph z. Denominators
/// range over all entities of the same graph, the positive pair included.
template <typename Scalar>
ad::Tensor<Scalar> contrastive_loss(ad::Tape<Scalar>& tape, const ProjectionHead<Scalar>& head,
                                    const ad::Tensor<Scalar>& source_original,
                                    const ad::Tensor<Scalar>& source_augmented,
                                    const ad::Tensor<Scalar>& target_original,
                                    const ad::Tensor<Scalar>& target_augmented) {
  using T = ad::Tensor<Scalar>;
  T total;
  const std::pair<const T*, const T*> graphs[2] = {{&source_original, &source_augmented},
                                                   {&target_original, &target_augmented}};
  for (const auto& [orig, aug] : graphs) {
    auto p = apply_projection(tape, head, *orig);
    auto q = apply_projection(tape, head, *aug);
    auto diagonal = ad::row_sum(tape, tape.mul(p, q));  // <p_i, q_i> per row
    auto terms = tape.add(detail::infonce_terms(tape, p, q, diagonal),
                          detail::infonce_terms(tape, q, p, diagonal));
    auto scaled = tape.scalar_mul(ad::sum_all(tape, terms),
                                  Scalar(1) / Scalar(2 * p.rows()));
    total = total.valid() ? tape.add(total, scaled) : scaled;
  }
  return total;
}

}  // namespace kgalign
