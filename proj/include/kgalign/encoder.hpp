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
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "kgalign/kg.hpp"
#include "kgalign/optim.hpp"
#include "kgalign/rng.hpp"
#include "kgalign/tensor.hpp"

namespace kgalign {

/// Edge arrays a graph view exposes to the encoder. `centers`/`neighbors`
/// list one attention edge per incident triple per direction (the undirected
/// neighborhood) plus one virtual self-loop per entity, so every entity has a
/// defined output even at degree 0. The relation channel keeps outward and
/// inward triple lists with per-edge mean weights.
struct AttentionGraph {
  int32_t n = 0;
  std::vector<int32_t> centers;
  std::vector<int32_t> neighbors;

  std::vector<int32_t> out_centers, out_rels;
  std::vector<int32_t> in_centers, in_rels;
  std::vector<double> out_weights, in_weights;  // 1/|N^{r+}|, 1/|N^{r-}| per edge

  static AttentionGraph build(const KnowledgeGraph& kg) {
    AttentionGraph g;
    g.n = kg.entity_count;
    const std::size_t t = kg.triples.size();
    g.centers.reserve(2 * t + kg.entity_count);
    g.neighbors.reserve(2 * t + kg.entity_count);
    std::vector<int32_t> out_deg(kg.entity_count, 0), in_deg(kg.entity_count, 0);
    for (const Triple& tr : kg.triples) {
      g.centers.push_back(tr.head);
      g.neighbors.push_back(tr.tail);
      g.centers.push_back(tr.tail);
      g.neighbors.push_back(tr.head);
      g.out_centers.push_back(tr.head);
      g.out_rels.push_back(tr.rel);
      g.in_centers.push_back(tr.tail);
      g.in_rels.push_back(tr.rel);
      ++out_deg[tr.head];
      ++in_deg[tr.tail];
    }
    for (int32_t i = 0; i < kg.entity_count; ++i) {
      g.centers.push_back(i);
      g.neighbors.push_back(i);
    }
    g.out_weights.reserve(t);
    g.in_weights.reserve(t);
    for (const Triple& tr : kg.triples) {
      g.out_weights.push_back(1.0 / static_cast<double>(out_deg[tr.head]));
      g.in_weights.push_back(1.0 / static_cast<double>(in_deg[tr.tail]));
    }
    return g;
  }
};

template <typename Scalar>
struct GatLayerParams {
  ad::Tensor<Scalar> attn_weight;  // d_ent x d_ent
  ad::Tensor<Scalar> attn_vector;  // 2*d_ent x 1
};

template <typename Scalar>
struct ProjectionHead {
  ad::Tensor<Scalar> weight;  // final_width x d_proj
  ad::Tensor<Scalar> bias;    // 1 x d_proj
};

/// All trainable state: entity/relation embeddings, per-layer attention
/// parameters, the multi-range fusion matrices, and the shared projection
/// head used by the contrastive objective.
template <typename Scalar>
struct EncoderParams {
  int32_t d_ent = 0;
  int32_t d_rel = 0;
  int32_t d_proj = 0;

  ad::Tensor<Scalar> entity_embeddings;    // (|E_s|+|E_t|) x d_ent
  ad::Tensor<Scalar> relation_embeddings;  // |R_s u R_t| x d_rel
  std::vector<GatLayerParams<Scalar>> gat_layers;
  ad::Tensor<Scalar> fuse_query;  // W_q
  ad::Tensor<Scalar> fuse_key;    // W_k
  ProjectionHead<Scalar> projection;

  /// The projection head's input width follows the configured encoder output:
  /// d_ent + 2*d_rel, or just d_ent when the relation channel is ablated.
  static EncoderParams init(int32_t n_entities_total, int32_t n_relations, int32_t d_ent,
                            int32_t d_rel, int32_t d_proj, int32_t n_layers, Rng& rng,
                            bool use_relation_channel = true) {
    if (n_layers < 1) throw ConfigError("encoder needs at least one attention layer");
    EncoderParams p;
    p.d_ent = d_ent;
    p.d_rel = d_rel;
    p.d_proj = d_proj;
    p.entity_embeddings = ad::xavier_init<Scalar>(n_entities_total, d_ent, rng);
    p.relation_embeddings = ad::xavier_init<Scalar>(n_relations, d_rel, rng);
    for (int32_t l = 0; l < n_layers; ++l) {
      GatLayerParams<Scalar> layer;
      layer.attn_weight = ad::xavier_init<Scalar>(d_ent, d_ent, rng);
      layer.attn_vector = ad::xavier_init<Scalar>(2 * static_cast<std::size_t>(d_ent), 1, rng);
      p.gat_layers.push_back(std::move(layer));
    }
    p.fuse_query = ad::xavier_init<Scalar>(d_ent, d_ent, rng);
    p.fuse_key = ad::xavier_init<Scalar>(d_ent, d_ent, rng);
    const auto proj_in = static_cast<std::size_t>(p.final_width(use_relation_channel));
    p.projection.weight = ad::xavier_init<Scalar>(proj_in, d_proj, rng);
    p.projection.bias = ad::xavier_init<Scalar>(1, d_proj, rng);
    return p;
  }

  int32_t final_width(bool use_relation_channel) const {
    return use_relation_channel ? d_ent + 2 * d_rel : d_ent;
  }

  std::vector<std::pair<std::string, ad::Tensor<Scalar>>> named_tensors() const {
    std::vector<std::pair<std::string, ad::Tensor<Scalar>>> named;
    named.emplace_back("entity_embeddings", entity_embeddings);
    named.emplace_back("relation_embeddings", relation_embeddings);
    for (std::size_t l = 0; l < gat_layers.size(); ++l) {
      named.emplace_back("gat" + std::to_string(l) + ".attn_weight", gat_layers[l].attn_weight);
      named.emplace_back("gat" + std::to_string(l) + ".attn_vector", gat_layers[l].attn_vector);
    }
    named.emplace_back("fuse_query", fuse_query);
    named.emplace_back("fuse_key", fuse_key);
    named.emplace_back("projection.weight", projection.weight);
    named.emplace_back("projection.bias", projection.bias);
    return named;
  }

  EncoderParams clone() const {
    EncoderParams p;
    p.d_ent = d_ent;
    p.d_rel = d_rel;
    p.d_proj = d_proj;
    p.entity_embeddings = entity_embeddings.clone();
    p.relation_embeddings = relation_embeddings.clone();
    for (const auto& layer : gat_layers) {
      p.gat_layers.push_back({layer.attn_weight.clone(), layer.attn_vector.clone()});
    }
    p.fuse_query = fuse_query.clone();
    p.fuse_key = fuse_key.clone();
    p.projection.weight = projection.weight.clone();
    p.projection.bias = projection.bias.clone();
    return p;
  }

  /// Copy values from another instance with identical shapes.
  void assign_from(const EncoderParams& other) {
    entity_embeddings.assign_values(other.entity_embeddings.values());
    relation_embeddings.assign_values(other.relation_embeddings.values());
    for (std::size_t l = 0; l < gat_layers.size(); ++l) {
      gat_layers[l].attn_weight.assign_values(other.gat_layers[l].attn_weight.values());
      gat_layers[l].attn_vector.assign_values(other.gat_layers[l].attn_vector.values());
    }
    fuse_query.assign_values(other.fuse_query.values());
    fuse_key.assign_values(other.fuse_key.values());
    projection.weight.assign_values(other.projection.weight.values());
    projection.bias.assign_values(other.projection.bias.values());
  }
};

struct EncodeOptions {
  bool training = false;
  double dropout_rate = 0.0;
  bool use_relation_channel = true;
};

template <typename Scalar>
struct EncoderOutput {
  ad::Tensor<Scalar> final;                    // n x (d_ent + 2*d_rel), or n x d_ent
  std::vector<ad::Tensor<Scalar>> per_layer;   // h^(1) .. h^(L)
  ad::Tensor<Scalar> neighborhood;             // h^n
  ad::Tensor<Scalar> relation;                 // h^r (unset when channel disabled)
};

namespace detail {

inline std::vector<int32_t> iota_ids(int32_t from, int32_t to) {
  std::vector<int32_t> ids(static_cast<std::size_t>(to - from));
  for (int32_t i = from; i < to; ++i) ids[static_cast<std::size_t>(i - from)] = i;
  return ids;
}

/// Per-segment max of a column, as a constant tensor. Subtracting a constant
/// inside softmax leaves both value and gradient unchanged, so the shift may
/// stay off the tape.
template <typename Scalar>
ad::Tensor<Scalar> segment_max_constant(const ad::Tensor<Scalar>& column,
                                        const std::vector<int32_t>& segments, int32_t n) {
  auto maxes = ad::Tensor<Scalar>::full(n, 1, -std::numeric_limits<Scalar>::infinity());
  const auto& v = column.values();
  auto& mv = maxes.values();
  for (std::size_t e = 0; e < segments.size(); ++e) {
    mv[segments[e]] = std::max(mv[segments[e]], v[e]);
  }
  // segments with no edges cannot occur (self-loops), but keep them finite
  for (auto& m : mv) {
    if (m == -std::numeric_limits<Scalar>::infinity()) m = Scalar(0);
  }
  return maxes;
}

}  // namespace detail

/// One graph-attention layer without input transforms: attention logits use
/// W_g and a, but aggregation mixes the untransformed h_prev rows.
/// For each entity i, output_i = sum_{j in N_i} alpha_ij h_prev[j] with
/// alpha = softmax over N_i of LeakyReLU(a^T [W_g h_i (+) W_g h_j]).
template <typename Scalar>
ad::Tensor<Scalar> gat_layer(ad::Tape<Scalar>& tape, const ad::Tensor<Scalar>& h_prev,
                             const AttentionGraph& graph, const GatLayerParams<Scalar>& params,
                             const EncodeOptions& opts, Rng& dropout_rng) {
  using T = ad::Tensor<Scalar>;
  if (static_cast<int32_t>(h_prev.rows()) != graph.n) {
    throw ShapeError("gat_layer: adjacency entity count disagrees with h_prev rows");
  }
  const auto d = static_cast<int32_t>(h_prev.cols());

  T hw = tape.matmul(h_prev, params.attn_weight);
  // a^T [u (+) v] = a_top . u + a_bottom . v
  T a_top = tape.lookup_rows(params.attn_vector, detail::iota_ids(0, d));
  T a_bottom = tape.lookup_rows(params.attn_vector, detail::iota_ids(d, 2 * d));
  T score_center = tape.matmul(hw, a_top);     // n x 1
  T score_neighbor = tape.matmul(hw, a_bottom);  // n x 1
  T logits = tape.leaky_relu(tape.add(tape.lookup_rows(score_center, graph.centers),
                                      tape.lookup_rows(score_neighbor, graph.neighbors)));

  // softmax over each center's neighborhood, stabilized by the segment max
  T seg_max = detail::segment_max_constant(logits, graph.centers, graph.n);
  T shifted = tape.sub(logits, tape.lookup_rows(seg_max, graph.centers));
  T expd = tape.exp(shifted);
  T denom = tape.segment_weighted_sum(expd, T::ones(expd.rows(), 1), graph.centers, graph.n);
  T log_denom = tape.log(denom);
  T alpha = tape.exp(tape.sub(shifted, tape.lookup_rows(log_denom, graph.centers)));

  alpha = tape.dropout(alpha, opts.dropout_rate, opts.training, dropout_rng);

  T messages = tape.lookup_rows(h_prev, graph.neighbors);
  return tape.segment_weighted_sum(messages, alpha, graph.centers, graph.n);
}

/// Scaled dot-product attention over the stack of per-layer outputs, then the
/// weighted rows are averaged into one representation per entity:
///   A_i = softmax((H_i W_q)(H_i W_k)^T / sqrt(d)),  h_i = mean_l (A_i H_i)[l].
template <typename Scalar>
ad::Tensor<Scalar> fuse_ranges(ad::Tape<Scalar>& tape,
                               const std::vector<ad::Tensor<Scalar>>& per_layer,
                               const ad::Tensor<Scalar>& w_query,
                               const ad::Tensor<Scalar>& w_key) {
  using T = ad::Tensor<Scalar>;
  if (per_layer.empty()) throw ShapeError("fuse_ranges: need at least one layer");
  const std::size_t layer_count = per_layer.size();
  const auto d = per_layer[0].cols();
  const Scalar inv_sqrt_d = Scalar(1.0 / std::sqrt(static_cast<double>(d)));

  std::vector<T> queries, keys;
  queries.reserve(layer_count);
  keys.reserve(layer_count);
  for (const T& h : per_layer) {
    queries.push_back(tape.matmul(h, w_query));
    keys.push_back(tape.matmul(h, w_key));
  }

  // logits[l][m] per entity: <q_l, k_m> / sqrt(d), shaped n x L per l
  std::vector<T> mixed;
  mixed.reserve(layer_count);
  for (std::size_t l = 0; l < layer_count; ++l) {
    std::vector<T> scores;
    scores.reserve(layer_count);
    for (std::size_t m = 0; m < layer_count; ++m) {
      scores.push_back(
          tape.scalar_mul(ad::row_sum(tape, tape.mul(queries[l], keys[m])), inv_sqrt_d));
    }
    T attn = tape.softmax(tape.concat(scores, 1), 1);  // n x L, rows sum to 1
    T combined;
    for (std::size_t m = 0; m < layer_count; ++m) {
      auto selector = T::zeros(layer_count, 1);
      selector.values()[m] = Scalar(1);
      T coeff = tape.matmul(attn, selector);             // n x 1
      T scaled = tape.mul(per_layer[m], coeff);          // column-broadcast
      combined = combined.valid() ? tape.add(combined, scaled) : scaled;
    }
    mixed.push_back(combined);
  }

  T total;
  for (const T& h : mixed) total = total.valid() ? tape.add(total, h) : h;
  return tape.scalar_mul(total, Scalar(1) / Scalar(layer_count));
}

/// Directional relation semantics: per entity the mean of relation embeddings
/// over outward triples concatenated with the mean over inward triples. An
/// empty direction contributes a zero half.
template <typename Scalar>
ad::Tensor<Scalar> relation_aggregate(ad::Tape<Scalar>& tape, const AttentionGraph& graph,
                                      const ad::Tensor<Scalar>& relation_embeddings) {
  using T = ad::Tensor<Scalar>;
  auto weights_tensor = [](const std::vector<double>& w) {
    T t = T::zeros(w.size(), 1);
    for (std::size_t i = 0; i < w.size(); ++i) t.values()[i] = static_cast<Scalar>(w[i]);
    return t;
  };
  const auto d_rel = relation_embeddings.cols();
  T out_mean, in_mean;
  if (graph.out_centers.empty()) {
    out_mean = T::zeros(graph.n, d_rel);
    in_mean = T::zeros(graph.n, d_rel);
  } else {
    out_mean = tape.segment_weighted_sum(tape.lookup_rows(relation_embeddings, graph.out_rels),
                                         weights_tensor(graph.out_weights), graph.out_centers,
                                         graph.n);
    in_mean = tape.segment_weighted_sum(tape.lookup_rows(relation_embeddings, graph.in_rels),
                                        weights_tensor(graph.in_weights), graph.in_centers,
                                        graph.n);
  }
  return tape.concat({out_mean, in_mean}, 1);
}

/// Full ER encoder pass over one graph view. `entity_offset` maps the view's
/// local ids onto rows of the shared embedding table, so the same parameters
/// encode the source graph, the target graph, and any augmented view.
template <typename Scalar>
EncoderOutput<Scalar> encode(ad::Tape<Scalar>& tape, const EncoderParams<Scalar>& params,
                             const AttentionGraph& graph, int32_t entity_offset,
                             const EncodeOptions& opts, Rng& dropout_rng) {
  using T = ad::Tensor<Scalar>;
  EncoderOutput<Scalar> out;

  T h = tape.lookup_rows(params.entity_embeddings,
                         detail::iota_ids(entity_offset, entity_offset + graph.n));
  for (const auto& layer : params.gat_layers) {
    h = gat_layer(tape, h, graph, layer, opts, dropout_rng);
    out.per_layer.push_back(h);
  }

  T fused = fuse_ranges(tape, out.per_layer, params.fuse_query, params.fuse_key);
  fused = tape.dropout(fused, opts.dropout_rate, opts.training, dropout_rng);
  out.neighborhood = fused;

  if (opts.use_relation_channel) {
    out.relation = relation_aggregate(tape, graph, params.relation_embeddings);
    out.final = tape.concat({out.neighborhood, out.relation}, 1);
  } else {
    out.final = out.neighborhood;
  }
  return out;
}

}  // namespace kgalign
