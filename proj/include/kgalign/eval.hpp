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

#include <cstdint>
#include <utility>
#include <vector>

#include "kgalign/kg.hpp"
#include "kgalign/tensor.hpp"

namespace kgalign {

/// Row-major matrix of final embeddings, in double regardless of the training
/// precision (ranking only compares distances).
struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  const double* row(std::size_t r) const { return values.data() + r * cols; }
};

template <typename Scalar>
EmbeddingMatrix to_embedding_matrix(const ad::Tensor<Scalar>& t) {
  EmbeddingMatrix m;
  m.rows = t.rows();
  m.cols = t.cols();
  m.values.assign(t.values().begin(), t.values().end());
  return m;
}

/// Rank of the true counterpart (1-based) among all target entities, plus the
/// predicted top-k list. Equal distances rank the smaller entity id ahead.
struct RankResult {
  EntityId source = 0;
  EntityId truth = 0;
  int32_t rank = 0;
  std::vector<EntityId> top_k;
};

struct AlignmentMetrics {
  double hits_at_1 = 0.0;
  double hits_at_5 = 0.0;
  double mrr = 0.0;
  int64_t n = 0;
};

/// Exhaustive Euclidean nearest-neighbor search over all target entities;
/// ties break toward the smaller entity id.
EntityId infer_alignment(EntityId source, const EmbeddingMatrix& source_embeddings,
                         const EmbeddingMatrix& target_embeddings);

/// Rank every test pair's true counterpart: rank = 1 + |closer| + |equal with
/// smaller id|.
std::vector<RankResult> rank_all(const std::vector<std::pair<EntityId, EntityId>>& pairs,
                                 const EmbeddingMatrix& source_embeddings,
                                 const EmbeddingMatrix& target_embeddings, int top_k = 5);

double hits_at(const std::vector<RankResult>& ranks, int k);
double mean_reciprocal_rank(const std::vector<RankResult>& ranks);

/// Hits@{1,5} and MRR. Throws on empty input.
AlignmentMetrics compute_metrics(const std::vector<RankResult>& ranks);

}  // namespace kgalign
