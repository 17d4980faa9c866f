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
#include "kgalign/eval.hpp"

#include <algorithm>
#include <cmath>

namespace kgalign {

namespace {

double squared_distance(const double* a, const double* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

}  // namespace

EntityId infer_alignment(EntityId source, const EmbeddingMatrix& source_embeddings,
                         const EmbeddingMatrix& target_embeddings) {
  if (target_embeddings.rows == 0) throw DataError("infer_alignment: empty target set");
  if (source_embeddings.cols != target_embeddings.cols) {
    throw ShapeError("infer_alignment: embedding widths disagree");
  }
  const double* query = source_embeddings.row(static_cast<std::size_t>(source));
  EntityId best = 0;
  double best_dist = squared_distance(query, target_embeddings.row(0), target_embeddings.cols);
  for (std::size_t j = 1; j < target_embeddings.rows; ++j) {
    const double d = squared_distance(query, target_embeddings.row(j), target_embeddings.cols);
    if (d < best_dist) {  // strict: ties keep the smaller id
      best_dist = d;
      best = static_cast<EntityId>(j);
    }
  }
  return best;
}

std::vector<RankResult> rank_all(const std::vector<std::pair<EntityId, EntityId>>& pairs,
                                 const EmbeddingMatrix& source_embeddings,
                                 const EmbeddingMatrix& target_embeddings, int top_k) {
  if (target_embeddings.rows == 0) throw DataError("rank_all: empty target set");
  std::vector<RankResult> results;
  results.reserve(pairs.size());
  std::vector<double> dist(target_embeddings.rows);
  for (const auto& [src, truth] : pairs) {
    const double* query = source_embeddings.row(static_cast<std::size_t>(src));
    for (std::size_t j = 0; j < target_embeddings.rows; ++j) {
      dist[j] = squared_distance(query, target_embeddings.row(j), target_embeddings.cols);
    }
    const double true_dist = dist[static_cast<std::size_t>(truth)];
    int32_t rank = 1;
    for (std::size_t j = 0; j < dist.size(); ++j) {
      if (dist[j] < true_dist ||
          (dist[j] == true_dist && static_cast<EntityId>(j) < truth)) {
        ++rank;
      }
    }
    RankResult r;
    r.source = src;
    r.truth = truth;
    r.rank = rank;
    if (top_k > 0) {
      std::vector<EntityId> ids(target_embeddings.rows);
      for (std::size_t j = 0; j < ids.size(); ++j) ids[j] = static_cast<EntityId>(j);
      const std::size_t k = std::min<std::size_t>(top_k, ids.size());
      std::partial_sort(ids.begin(), ids.begin() + k, ids.end(),
                        [&](EntityId a, EntityId b) {
                          if (dist[a] != dist[b]) return dist[a] < dist[b];
                          return a < b;
                        });
      ids.resize(k);
      r.top_k = std::move(ids);
    }
    results.push_back(std::move(r));
  }
  return results;
}

double hits_at(const std::vector<RankResult>& ranks, int k) {
  if (ranks.empty()) throw DataError("hits_at: empty rank list");
  int64_t hits = 0;
  for (const RankResult& r : ranks) {
    if (r.rank <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mean_reciprocal_rank(const std::vector<RankResult>& ranks) {
  if (ranks.empty()) throw DataError("mean_reciprocal_rank: empty rank list");
  double acc = 0.0;
  for (const RankResult& r : ranks) acc += 1.0 / static_cast<double>(r.rank);
  return acc / static_cast<double>(ranks.size());
}

AlignmentMetrics compute_metrics(const std::vector<RankResult>& ranks) {
  AlignmentMetrics m;
  m.hits_at_1 = hits_at(ranks, 1);
  m.hits_at_5 = hits_at(ranks, 5);
  m.mrr = mean_reciprocal_rank(ranks);
  m.n = static_cast<int64_t>(ranks.size());
  return m;
}

}  // namespace kgalign
